#include "sforge_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "sforge/fields.hpp"
#include "sforge/metrics.hpp"
#include "sforge/registry.hpp"
#include "sforge/rng.hpp"
#include "sforge/samplers.hpp"
#include "sforge/search.hpp"
#include "sforge/solver_schedule.hpp"

namespace sforge::cli {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// --schedule accepts a file path or "<model_tag>:<nfe>" for a bundled table
SolverSchedule resolve_schedule(const std::string& token) {
    auto colon = token.rfind(':');
    if (colon != std::string::npos && token.find('/') == std::string::npos) {
        std::string tag = token.substr(0, colon);
        int nfe = std::stoi(token.substr(colon + 1));
        return load_schedule(paper_table_path(tag, nfe));
    }
    return load_schedule(token);
}

std::vector<double> seed_x0(std::uint64_t seed, int dim) {
    CounterRng rng(seed, 11);
    return rng.normal_vec(static_cast<std::size_t>(dim));
}

// oracle state linearly interpolated at sampling time t
std::vector<double> oracle_at(const Trajectory& oracle, double t) {
    const int L = static_cast<int>(oracle.states.size()) - 1;
    int k = std::clamp(static_cast<int>(t * L), 0, L - 1);
    double frac = t * L - k;
    std::vector<double> out(oracle.states[0].size());
    for (std::size_t d = 0; d < out.size(); ++d) {
        double lo = oracle.states[static_cast<std::size_t>(k)][d];
        double hi = oracle.states[static_cast<std::size_t>(k) + 1][d];
        out[d] = lo + frac * (hi - lo);
    }
    return out;
}

double trajectory_rmse(const Trajectory& tr, const Trajectory& oracle) {
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 1; i < tr.states.size(); ++i) {
        auto ref = oracle_at(oracle, tr.times[i]);
        for (std::size_t d = 0; d < ref.size(); ++d) {
            double e = tr.states[i][d] - ref[d];
            sq += e * e;
            ++count;
        }
    }
    return std::sqrt(sq / static_cast<double>(count));
}

} // namespace

int cmd_search(const SearchOptions& opt, std::ostream& log) {
    Problem p;
    try {
        p = resolve_problem(opt.problem);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kUsageError;
    }
    const SchedulerKind want =
        opt.scheduler == "vp" ? SchedulerKind::VPLinear : SchedulerKind::RectifiedFlow;
    if (opt.scheduler != "rf" && opt.scheduler != "vp") {
        log << "error: --scheduler must be rf or vp\n";
        return kUsageError;
    }
    if (want != p.kind) {
        log << "error: problem '" << opt.problem << "' uses the " << to_string(p.kind)
            << " scheduler, not " << opt.scheduler << "\n";
        return kUsageError;
    }

    SearchConfig cfg;
    cfg.nfe = opt.nfe;
    cfg.ref_steps = opt.ref_steps;
    cfg.batch = opt.batch;
    cfg.iterations = opt.iters;
    cfg.lr = opt.lr;
    cfg.seed = opt.seed;
    if (opt.max_order > 0)
        cfg.max_order.assign(static_cast<std::size_t>(opt.nfe), opt.max_order);
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kUsageError;
    }

    SearchResult res;
    try {
        res = run_search(p, cfg);
    } catch (const std::exception& e) {
        log << "error: search failed: " << e.what() << "\n";
        return kDiverged;
    }
    if (res.diverged) {
        log << "error: search diverged (non-finite loss or gradient)\n";
        return kDiverged;
    }

    try {
        save_schedule(res.schedule, opt.out);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kUsageError;
    }

    const std::string loss_path = opt.loss_out.empty() ? opt.out + ".loss.csv" : opt.loss_out;
    std::ofstream csv(loss_path);
    if (!csv) {
        log << "error: cannot write " << loss_path << "\n";
        return kUsageError;
    }
    csv << "iteration,loss,mse,huber,grad_norm\n";
    for (const auto& row : res.history)
        csv << row.iteration << "," << fmt17(row.loss) << "," << fmt17(row.mse) << ","
            << fmt17(row.huber) << "," << fmt17(row.grad_norm) << "\n";

    const double factor = res.best_loss > 0.0 ? res.initial_loss / res.best_loss : 1.0;
    log << "final loss: " << fmt17(res.best_loss) << "\n";
    log << "improvement factor vs Euler: " << fmt17(factor) << "\n";
    log << "schedule written to " << opt.out << "\n";
    return kOk;
}

namespace {

struct BenchCell {
    std::string solver;
    int nfe;
    Trajectory tr;
};

// run one named baseline at the requested NFE budget
Trajectory run_baseline(const Problem& p, const std::string& solver,
                        const std::vector<double>& x0, int nfe) {
    if (p.kind == SchedulerKind::RectifiedFlow) {
        if (solver == "euler") return euler_sample(p.field, x0, uniform_grid(nfe));
        if (solver == "heun") {
            if (nfe < 2) throw std::invalid_argument("heun needs nfe >= 2");
            // 2 evaluations per step: match the NFE budget, not the step count
            return heun_sample(p.field, x0, uniform_grid(nfe / 2));
        }
        if (solver == "ab2") return adams_bashforth_sample(p.field, x0, uniform_grid(nfe), 2);
        if (solver == "ab4") return adams_bashforth_sample(p.field, x0, uniform_grid(nfe), 4);
        throw std::invalid_argument("solver '" + solver + "' is not available for rf problems");
    }
    if (solver == "euler") return oracle_trajectory(p, x0, nfe);  // first-order exponential
    if (solver == "dpmpp2m")
        return dpm_solver_pp_2m_sample(p.field, x0, uniform_grid(nfe), p.noise, p.vp_t_min);
    throw std::invalid_argument("solver '" + solver + "' is not available for vp problems");
}

} // namespace

int cmd_bench(const BenchOptions& opt, std::ostream& log) {
    Problem p;
    try {
        p = resolve_problem(opt.problem);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kUsageError;
    }
    if (opt.nfe_lo < 1 || opt.nfe_hi < opt.nfe_lo) {
        log << "error: bad --nfe-range\n";
        return kUsageError;
    }
    if (opt.oracle_steps < 1000) {
        log << "error: --oracle-steps must be >= 1000\n";
        return kUsageError;
    }
    if (opt.seeds < 1) {
        log << "error: --seeds must be >= 1\n";
        return kUsageError;
    }

    // resolve solver tokens up front so unknown names fail before any work
    struct SolverEntry {
        std::string name;
        bool is_schedule = false;
        SolverSchedule sched;
    };
    std::vector<SolverEntry> entries;
    static const char* known[] = {"euler", "heun", "ab2", "ab4", "dpmpp2m"};
    for (const auto& token : opt.solvers) {
        SolverEntry e;
        e.name = token;
        bool is_known = std::find(std::begin(known), std::end(known), token) != std::end(known);
        if (is_known) {
            bool rf = p.kind == SchedulerKind::RectifiedFlow;
            if ((rf && token == "dpmpp2m") || (!rf && (token == "heun" || token == "ab2" || token == "ab4"))) {
                log << "error: solver '" << token << "' is not available for "
                    << to_string(p.kind) << " problems\n";
                return kUsageError;
            }
        } else {
            try {
                e.sched = resolve_schedule(token);
                e.is_schedule = true;
            } catch (const std::exception& ex) {
                log << "error: unknown solver '" << token << "' (" << ex.what() << ")\n";
                return kUsageError;
            }
            if (e.sched.kind != p.kind) {
                log << "error: schedule '" << token << "' is " << to_string(e.sched.kind)
                    << " but problem is " << to_string(p.kind) << "\n";
                return kUsageError;
            }
        }
        entries.push_back(std::move(e));
    }

    std::ofstream csv(opt.out);
    if (!csv) {
        log << "error: cannot write " << opt.out << "\n";
        return kUsageError;
    }
    csv << "problem,scheduler,solver,nfe,seed,endpoint_rmse,trajectory_rmse,wall_time\n";

    const int dim = p.field.dim;
    std::vector<std::vector<double>> x0s;
    std::vector<Trajectory> oracles;
    for (int s = 0; s < opt.seeds; ++s) {
        x0s.push_back(seed_x0(static_cast<std::uint64_t>(s), dim));
        oracles.push_back(oracle_trajectory(p, x0s.back(), opt.oracle_steps));
    }

    auto emit = [&](const std::string& solver, int nfe, int seed, const Trajectory& tr,
                    double wall) {
        const auto& oracle = oracles[static_cast<std::size_t>(seed)];
        double ep = rmse(tr.states.back(), oracle.states.back());
        double tj = trajectory_rmse(tr, oracle);
        csv << opt.problem << "," << to_string(p.kind) << "," << solver << "," << nfe << ","
            << seed << "," << fmt17(ep) << "," << fmt17(tj) << "," << fmt17(wall) << "\n";
    };

    for (const auto& e : entries) {
        if (e.is_schedule) {
            for (int s = 0; s < opt.seeds; ++s) {
                auto t0 = std::chrono::steady_clock::now();
                Trajectory tr = p.kind == SchedulerKind::RectifiedFlow
                                    ? multistep_rf_sample(p.field, x0s[static_cast<std::size_t>(s)], e.sched)
                                    : multistep_vp_sample(p.field, x0s[static_cast<std::size_t>(s)],
                                                          e.sched, p.noise, p.vp_t_min);
                double wall = opt.timing
                                  ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                                  : 0.0;
                emit(e.name, e.sched.nfe, s, tr, wall);
            }
            continue;
        }
        for (int nfe = opt.nfe_lo; nfe <= opt.nfe_hi; ++nfe) {
            for (int s = 0; s < opt.seeds; ++s) {
                auto t0 = std::chrono::steady_clock::now();
                Trajectory tr;
                try {
                    tr = run_baseline(p, e.name, x0s[static_cast<std::size_t>(s)], nfe);
                } catch (const DivergedError& ex) {
                    log << "error: " << ex.what() << "\n";
                    return kDiverged;
                }
                double wall = opt.timing
                                  ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                                  : 0.0;
                emit(e.name, nfe, s, tr, wall);
            }
        }
    }
    log << "wrote " << opt.out << "\n";
    return kOk;
}

int cmd_validate(const ValidateOptions& opt, std::ostream& log) {
    std::vector<TableReport> reports;
    if (opt.paper_tables) {
        reports = validate_paper_tables();
    } else if (!opt.files.empty()) {
        for (const auto& f : opt.files) reports.push_back(validate_schedule_file(f));
    } else {
        log << "error: need --paper-tables or --file\n";
        return kUsageError;
    }

    int failures = 0;
    for (const auto& r : reports) {
        log << (r.ok ? "PASS " : "FAIL ") << r.name << " nfe=" << r.nfe
            << " kind=" << to_string(r.kind) << " delta_sum=" << fmt17(r.delta_sum)
            << " max_abs_coeff=" << fmt17(r.max_abs_coeff)
            << " order_capped_last_two=" << (r.order_capped_last_two ? "yes" : "no") << "\n";
        for (const auto& e : r.errors) log << "    " << e << "\n";
        if (!r.ok) ++failures;
    }
    log << reports.size() - static_cast<std::size_t>(failures) << "/" << reports.size()
        << " schedules valid\n";
    return failures == 0 ? kOk : kValidationFailure;
}

int cmd_bound_check(const BoundCheckOptions& opt, std::ostream& log) {
    if (!(opt.eta >= 0.0) || opt.trials < 1) {
        log << "error: need --eta >= 0 and --trials >= 1\n";
        return kUsageError;
    }
    Problem p;
    SolverSchedule sched;
    try {
        p = resolve_problem(opt.problem);
        sched = resolve_schedule(opt.schedule);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kUsageError;
    }
    if (p.kind != SchedulerKind::RectifiedFlow || sched.kind != SchedulerKind::RectifiedFlow) {
        log << "error: bound check is defined for rectified-flow schedules and problems\n";
        return kUsageError;
    }

    const double bound = opt.eta * sched.error_amplification();
    log << "bound: eta * sum |M[i][j]| * dt_i = " << fmt17(bound) << "\n";

    // The bound concerns the velocity-estimation error in isolation: both
    // solvers see the same states, one with exact and one with perturbed
    // velocities. Deviation = sum_i dt_i sum_j M[i][j] (v_pert - v)(x_j, t_j).
    int violations = 0;
    double max_dev = 0.0;
    for (int trial = 0; trial < opt.trials; ++trial) {
        auto x0 = seed_x0(static_cast<std::uint64_t>(trial), p.field.dim);
        auto base = multistep_rf_sample(p.field, x0, sched);
        auto pert = VelocityField::perturbed(p.field, opt.eta, static_cast<std::uint64_t>(trial));

        std::vector<double> dev(x0.size(), 0.0);
        std::vector<std::vector<double>> delta_v;
        for (int j = 0; j < sched.nfe; ++j) {
            auto vp = eval_velocity(pert, base.states[static_cast<std::size_t>(j)],
                                    base.times[static_cast<std::size_t>(j)]);
            for (std::size_t d = 0; d < vp.size(); ++d)
                vp[d] -= base.evals[static_cast<std::size_t>(j)][d];
            delta_v.push_back(std::move(vp));
        }
        for (int i = 0; i < sched.nfe; ++i)
            for (int j = 0; j <= i; ++j)
                for (std::size_t d = 0; d < dev.size(); ++d)
                    dev[d] += sched.deltas[static_cast<std::size_t>(i)] * sched.m(i, j) *
                              delta_v[static_cast<std::size_t>(j)][d];

        double l1 = 0.0;
        for (double v : dev) l1 += std::abs(v);
        max_dev = std::max(max_dev, l1);
        if (l1 > bound + 1e-12) {
            ++violations;
            log << "violation at trial " << trial << ": deviation " << fmt17(l1) << "\n";
        }
    }
    log << "max deviation: " << fmt17(max_dev) << " over " << opt.trials << " trials, "
        << violations << " violations\n";
    return violations == 0 ? kOk : kValidationFailure;
}

int cmd_respace(const RespaceOptions& opt, std::ostream& log) {
    RespacePolynomial poly;
    if (opt.family == "reflow") poly = reflow_respace();
    else if (opt.family == "ddpm") poly = ddpm_respace();
    else {
        log << "error: --family must be reflow or ddpm\n";
        return kUsageError;
    }
    if (opt.nfe < 1) {
        log << "error: --nfe must be >= 1\n";
        return kUsageError;
    }
    auto grid = respace_grid(poly, opt.nfe);
    for (std::size_t i = 0; i < grid.size(); ++i) log << (i ? " " : "") << fmt17(grid[i]);
    log << "\n";
    return kOk;
}

} // namespace sforge::cli
