#include "sforge/search.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "sforge/rng.hpp"
#include "sforge/tape.hpp"

namespace sforge {

void SearchConfig::validate() const {
    if (nfe < 1) throw std::invalid_argument("search: nfe must be >= 1");
    if (ref_steps < nfe) throw std::invalid_argument("search: ref_steps must be >= nfe");
    if (batch < 1) throw std::invalid_argument("search: batch must be >= 1");
    if (iterations < 0) throw std::invalid_argument("search: iterations must be >= 0");
    if (!(lr > 0.0)) throw std::invalid_argument("search: lr must be > 0");
    if (!(huber_delta > 0.0)) throw std::invalid_argument("search: huber_delta must be > 0");
    if (!(w_mse >= 0.0) || !(w_huber >= 0.0))
        throw std::invalid_argument("search: loss weights must be >= 0");
    if (!(lion_beta1 > 0.0 && lion_beta1 < 1.0) || !(lion_beta2 > 0.0 && lion_beta2 < 1.0))
        throw std::invalid_argument("search: betas must be in (0,1)");
    if (!max_order.empty()) {
        if (static_cast<int>(max_order.size()) != nfe)
            throw std::invalid_argument("search: max_order must have nfe entries");
        for (int c : max_order)
            if (c < 0) throw std::invalid_argument("search: max_order entries must be >= 0");
    }
}

std::string SearchConfig::hash() const {
    char buf[512];
    int len = std::snprintf(buf, sizeof buf, "n%d|L%d|b%d|it%d|lr%.17g|s%llu|wm%.17g|wh%.17g|hd%.17g|b1%.17g|b2%.17g|mo",
                            nfe, ref_steps, batch, iterations, lr,
                            static_cast<unsigned long long>(seed), w_mse, w_huber, huber_delta,
                            lion_beta1, lion_beta2);
    std::string s(buf, static_cast<std::size_t>(len));
    for (int c : max_order) s += "," + std::to_string(c);
    // FNV-1a 64
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

Trajectory reference_trajectory(const Problem& p, const std::vector<double>& x0, int ref_steps) {
    return oracle_trajectory(p, x0, ref_steps);
}

double alignment_loss(const Trajectory& source, const Trajectory& reference,
                      const SearchConfig& cfg) {
    double mse = 0.0, huber = 0.0;
    return detail::alignment_loss_t<double>(source.states, source.times, reference, cfg,
                                            &mse, &huber);
}

std::vector<std::vector<double>> draw_batch(std::uint64_t seed, std::uint64_t stream,
                                            int batch, int dim) {
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) {
        // one stream per sample so draws do not depend on batch layout
        CounterRng rng(seed, stream * 0x100000ull + static_cast<std::uint64_t>(b));
        out.push_back(rng.normal_vec(static_cast<std::size_t>(dim)));
    }
    return out;
}

namespace {

template <class S>
std::vector<std::vector<S>> run_rollout(const Problem& p, const std::vector<double>& x0,
                                        const GenericSchedule<S>& g) {
    if (p.kind == SchedulerKind::RectifiedFlow)
        return detail::rf_rollout(p.field, x0, g);
    return detail::vp_rollout(p.field, p.noise, x0, g, p.vp_t_min);
}

} // namespace

double search_loss(const Problem& p, const std::vector<std::vector<double>>& x0_batch,
                   const SearchConfig& cfg, const std::vector<double>& raw_r,
                   const std::vector<std::vector<double>>& raw_c) {
    auto g = parametrize(raw_r, raw_c, cfg.max_order);
    double total = 0.0;
    for (const auto& x0 : x0_batch) {
        auto ref = reference_trajectory(p, x0, cfg.ref_steps);
        auto states = run_rollout(p, x0, g);
        total += detail::alignment_loss_t<double>(states, g.times, ref, cfg, nullptr, nullptr);
    }
    return total / static_cast<double>(x0_batch.size());
}

GradResult grad_schedule(const Problem& p, const std::vector<std::vector<double>>& x0_batch,
                         const SearchConfig& cfg, const std::vector<double>& raw_r,
                         const std::vector<std::vector<double>>& raw_c) {
    const int n = cfg.nfe;
    GradResult out;
    out.d_raw_r.assign(raw_r.size(), 0.0);
    out.d_raw_c.resize(raw_c.size());
    for (std::size_t i = 0; i < raw_c.size(); ++i)
        out.d_raw_c[i].assign(raw_c[i].size(), 0.0);

    const double inv_batch = 1.0 / static_cast<double>(x0_batch.size());
    Tape tape;
    for (const auto& x0 : x0_batch) {
        auto ref = reference_trajectory(p, x0, cfg.ref_steps);

        tape.clear();
        std::vector<Var> r_in;
        r_in.reserve(raw_r.size());
        for (double v : raw_r) r_in.push_back(tape.input(v));
        std::vector<std::vector<Var>> c_in(raw_c.size());
        for (std::size_t i = 0; i < raw_c.size(); ++i) {
            c_in[i].reserve(raw_c[i].size());
            for (double v : raw_c[i]) c_in[i].push_back(tape.input(v));
        }

        auto g = parametrize(r_in, c_in, cfg.max_order);
        auto states = run_rollout(p, x0, g);
        Var mse, huber;
        Var loss = detail::alignment_loss_t<Var>(states, g.times, ref, cfg, &mse, &huber);

        out.loss += primal(loss) * inv_batch;
        out.mse += primal(mse) * inv_batch;
        out.huber += primal(huber) * inv_batch;
        if (!std::isfinite(primal(loss))) out.finite = false;

        auto adj = tape.backward(loss);
        for (int i = 0; i < n; ++i)
            out.d_raw_r[static_cast<std::size_t>(i)] +=
                adj[static_cast<std::size_t>(r_in[static_cast<std::size_t>(i)].idx)] * inv_batch;
        for (std::size_t i = 0; i < c_in.size(); ++i)
            for (std::size_t j = 0; j < c_in[i].size(); ++j)
                out.d_raw_c[i][j] += adj[static_cast<std::size_t>(c_in[i][j].idx)] * inv_batch;
    }

    for (double gv : out.d_raw_r)
        if (!std::isfinite(gv)) out.finite = false;
    for (const auto& row : out.d_raw_c)
        for (double gv : row)
            if (!std::isfinite(gv)) out.finite = false;
    return out;
}

void lion_step(std::vector<double>& params, const std::vector<double>& grads,
               std::vector<double>& momentum, double lr, double beta1, double beta2) {
    if (params.size() != grads.size() || params.size() != momentum.size())
        throw std::invalid_argument("lion_step: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        double u = beta1 * momentum[i] + (1.0 - beta1) * grads[i];
        double s = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
        params[i] -= lr * s;
        momentum[i] = beta2 * momentum[i] + (1.0 - beta2) * grads[i];
    }
}

SearchResult run_search(const Problem& p, const SearchConfig& cfg) {
    cfg.validate();
    const int n = cfg.nfe;
    const int dim = p.field.dim;

    std::vector<double> raw_r(static_cast<std::size_t>(n), 1.0);
    std::vector<std::vector<double>> raw_c(static_cast<std::size_t>(std::max(0, n - 1)));
    for (int i = 1; i < n; ++i) raw_c[static_cast<std::size_t>(i) - 1].assign(static_cast<std::size_t>(i), 0.0);

    // flat parameter order: raw_r then raw_c rows
    auto flatten = [&](const std::vector<double>& r, const std::vector<std::vector<double>>& c) {
        std::vector<double> f(r);
        for (const auto& row : c) f.insert(f.end(), row.begin(), row.end());
        return f;
    };
    auto unflatten = [&](const std::vector<double>& f, std::vector<double>& r,
                         std::vector<std::vector<double>>& c) {
        std::size_t k = 0;
        for (double& v : r) v = f[k++];
        for (auto& row : c)
            for (double& v : row) v = f[k++];
    };

    std::vector<double> params = flatten(raw_r, raw_c);
    std::vector<double> momentum(params.size(), 0.0);
    std::vector<double> best_params = params;

    SearchResult res;
    res.best_loss = std::numeric_limits<double>::infinity();

    for (int it = 0; it < cfg.iterations; ++it) {
        unflatten(params, raw_r, raw_c);
        auto batch = draw_batch(cfg.seed, static_cast<std::uint64_t>(it), cfg.batch, dim);
        GradResult gr;
        try {
            gr = grad_schedule(p, batch, cfg, raw_r, raw_c);
        } catch (const DivergedError&) {
            res.diverged = true;
            break;
        }
        if (!gr.finite) {
            res.diverged = true;
            break;
        }
        auto grads = flatten(gr.d_raw_r, gr.d_raw_c);
        double gn = 0.0;
        for (double gv : grads) gn += gv * gv;
        gn = std::sqrt(gn);
        res.history.push_back({it, gr.loss, gr.mse, gr.huber, gn});
        if (it == 0) res.initial_loss = gr.loss;
        if (gr.loss < res.best_loss) {
            res.best_loss = gr.loss;
            best_params = params;
        }
        lion_step(params, grads, momentum, cfg.lr, cfg.lion_beta1, cfg.lion_beta2);
    }

    // final parameters are never scored inside the loop; give them one
    // evaluation on a fresh deterministic batch
    if (!res.diverged && cfg.iterations > 0) {
        unflatten(params, raw_r, raw_c);
        auto batch = draw_batch(cfg.seed, static_cast<std::uint64_t>(cfg.iterations), cfg.batch, dim);
        try {
            double final_loss = search_loss(p, batch, cfg, raw_r, raw_c);
            if (std::isfinite(final_loss) && final_loss < res.best_loss) {
                res.best_loss = final_loss;
                best_params = params;
            }
        } catch (const DivergedError&) {
            // keep the best parameters already recorded
        }
    }
    if (cfg.iterations == 0) {
        auto batch = draw_batch(cfg.seed, 0, cfg.batch, dim);
        unflatten(params, raw_r, raw_c);
        res.initial_loss = search_loss(p, batch, cfg, raw_r, raw_c);
        res.best_loss = res.initial_loss;
    }

    unflatten(best_params, raw_r, raw_c);
    res.schedule = build_schedule(raw_r, raw_c, p.kind, cfg.max_order);
    res.schedule.model_tag = p.name;
    res.schedule.provenance.source = "searched";
    res.schedule.provenance.config_hash = cfg.hash();
    res.schedule.provenance.seed = cfg.seed;
    return res;
}

} // namespace sforge
