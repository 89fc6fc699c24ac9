#include "sforge/samplers.hpp"

#include <algorithm>
#include <cmath>

namespace sforge {

namespace {

void check_grid(const std::vector<double>& grid, const char* what) {
    if (grid.size() < 2) throw std::invalid_argument(std::string(what) + ": grid needs >= 2 points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument(std::string(what) + ": grid must be strictly increasing");
}

std::vector<double> axpy(const std::vector<double>& x, double a, const std::vector<double>& y) {
    std::vector<double> r(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) r[d] = x[d] + a * y[d];
    return r;
}

// one classic RK4 step, used only to warm up the multistep history
std::vector<double> rk4_step(const VelocityField& f, const std::vector<double>& x,
                             double t, double h) {
    auto k1 = eval_velocity(f, x, t);
    auto k2 = eval_velocity(f, axpy(x, 0.5 * h, k1), t + 0.5 * h);
    auto k3 = eval_velocity(f, axpy(x, 0.5 * h, k2), t + 0.5 * h);
    auto k4 = eval_velocity(f, axpy(x, h, k3), t + h);
    std::vector<double> r(x.size());
    for (std::size_t d = 0; d < x.size(); ++d)
        r[d] = x[d] + (h / 6.0) * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    return r;
}

} // namespace

std::vector<double> uniform_grid(int n) {
    if (n < 1) throw std::invalid_argument("uniform_grid: n must be >= 1");
    std::vector<double> g(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) g[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
    g.back() = 1.0;
    return g;
}

std::vector<double> lagrange_integral_weights(std::span<const double> nodes, double a, double b) {
    const std::size_t k = nodes.size();
    if (k == 0) throw std::invalid_argument("lagrange_integral_weights: no nodes");
    std::vector<double> w(k, 0.0);
    for (std::size_t m = 0; m < k; ++m) {
        // numerator polynomial prod_{j != m} (t - nodes[j]), low-order first
        std::vector<double> poly{1.0};
        double denom = 1.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == m) continue;
            denom *= nodes[m] - nodes[j];
            std::vector<double> next(poly.size() + 1, 0.0);
            for (std::size_t c = 0; c < poly.size(); ++c) {
                next[c + 1] += poly[c];
                next[c] -= nodes[j] * poly[c];
            }
            poly = std::move(next);
        }
        double integral = 0.0;
        for (std::size_t c = 0; c < poly.size(); ++c) {
            double p = static_cast<double>(c) + 1.0;
            integral += poly[c] * (std::pow(b, p) - std::pow(a, p)) / p;
        }
        w[m] = integral / denom;
    }
    return w;
}

Trajectory euler_sample(const VelocityField& field, const std::vector<double>& x0,
                        const std::vector<double>& grid) {
    check_grid(grid, "euler_sample");
    Trajectory tr;
    tr.times = grid;
    tr.nfe = static_cast<int>(grid.size()) - 1;
    std::vector<double> x = x0;
    tr.states.push_back(x);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        auto v = eval_velocity(field, x, grid[i]);
        tr.evals.push_back(v);
        double dt = grid[i + 1] - grid[i];
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = x[d] + dt * v[d];
        detail::check_finite(x, "euler_sample: non-finite state");
        tr.states.push_back(x);
    }
    return tr;
}

Trajectory heun_sample(const VelocityField& field, const std::vector<double>& x0,
                       const std::vector<double>& grid) {
    check_grid(grid, "heun_sample");
    Trajectory tr;
    tr.times = grid;
    tr.nfe = 2 * (static_cast<int>(grid.size()) - 1);
    std::vector<double> x = x0;
    tr.states.push_back(x);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        double dt = grid[i + 1] - grid[i];
        auto v0 = eval_velocity(field, x, grid[i]);
        auto xp = axpy(x, dt, v0);
        auto v1 = eval_velocity(field, xp, grid[i + 1]);
        tr.evals.push_back(v0);
        tr.evals.push_back(v1);
        for (std::size_t d = 0; d < x.size(); ++d)
            x[d] = x[d] + 0.5 * dt * (v0[d] + v1[d]);
        detail::check_finite(x, "heun_sample: non-finite state");
        tr.states.push_back(x);
    }
    return tr;
}

Trajectory adams_bashforth_sample(const VelocityField& field, const std::vector<double>& x0,
                                  const std::vector<double>& grid, int order) {
    check_grid(grid, "adams_bashforth_sample");
    if (order < 2 || order > 4)
        throw std::invalid_argument("adams_bashforth_sample: order must be in {2,3,4}");
    Trajectory tr;
    tr.times = grid;
    tr.nfe = static_cast<int>(grid.size()) - 1;
    std::vector<double> x = x0;
    tr.states.push_back(x);
    const int steps = static_cast<int>(grid.size()) - 1;
    for (int i = 0; i < steps; ++i) {
        const double t = grid[static_cast<std::size_t>(i)];
        const double tn = grid[static_cast<std::size_t>(i) + 1];
        auto v = eval_velocity(field, x, t);
        tr.evals.push_back(v);
        const int avail = i + 1;
        const int k = std::min(order, avail);
        if (k >= 2) {
            // exact integral of the degree-(k-1) interpolant of the last k
            // cached velocities over [t, tn]
            std::vector<double> nodes(static_cast<std::size_t>(k));
            for (int j = 0; j < k; ++j)
                nodes[static_cast<std::size_t>(j)] = grid[static_cast<std::size_t>(i - k + 1 + j)];
            auto w = lagrange_integral_weights(nodes, t, tn);
            std::vector<double> incr(x.size(), 0.0);
            for (int j = 0; j < k; ++j) {
                const auto& vj = tr.evals[static_cast<std::size_t>(i - k + 1 + j)];
                for (std::size_t d = 0; d < x.size(); ++d)
                    incr[d] += w[static_cast<std::size_t>(j)] * vj[d];
            }
            for (std::size_t d = 0; d < x.size(); ++d) x[d] += incr[d];
        } else if (order >= 3) {
            // single RK4 startup step so the global order is not capped by
            // the warmup; its extra evaluations are internal and not cached
            x = rk4_step(field, x, t, tn - t);
        } else {
            for (std::size_t d = 0; d < x.size(); ++d) x[d] += (tn - t) * v[d];
        }
        detail::check_finite(x, "adams_bashforth_sample: non-finite state");
        tr.states.push_back(x);
    }
    return tr;
}

GenericSchedule<double> as_generic(const SolverSchedule& sched) {
    GenericSchedule<double> g;
    g.deltas = sched.deltas;
    g.times = sched.times;
    g.rows.resize(static_cast<std::size_t>(sched.nfe));
    for (int i = 1; i < sched.nfe; ++i)
        g.rows[static_cast<std::size_t>(i)] = sched.coeff_rows[static_cast<std::size_t>(i) - 1];
    return g;
}

Trajectory multistep_rf_sample(const VelocityField& field, const std::vector<double>& x0,
                               const SolverSchedule& sched) {
    if (sched.kind != SchedulerKind::RectifiedFlow)
        throw std::invalid_argument("multistep_rf_sample: schedule kind is not rectified flow");
    auto g = as_generic(sched);
    auto states = detail::rf_rollout(field, x0, g);
    Trajectory tr;
    tr.times = sched.times;
    tr.states = std::move(states);
    tr.nfe = sched.nfe;
    for (int i = 0; i < sched.nfe; ++i)
        tr.evals.push_back(eval_velocity(field, tr.states[static_cast<std::size_t>(i)],
                                         sched.times[static_cast<std::size_t>(i)]));
    return tr;
}

Trajectory multistep_vp_sample(const VelocityField& xbar_field, const std::vector<double>& x0,
                               const SolverSchedule& sched, const NoiseSchedule& noise,
                               double t_min) {
    if (sched.kind != SchedulerKind::VPLinear)
        throw std::invalid_argument("multistep_vp_sample: schedule kind is not VP");
    if (noise.kind != SchedulerKind::VPLinear)
        throw std::invalid_argument("multistep_vp_sample: noise schedule is not VP");
    auto g = as_generic(sched);
    auto states = detail::vp_rollout(xbar_field, noise, x0, g, t_min);
    Trajectory tr;
    tr.times = sched.times;
    tr.states = std::move(states);
    tr.nfe = sched.nfe;
    for (int i = 0; i < sched.nfe; ++i) {
        double vt = vp_time_of_sampling(sched.times[static_cast<std::size_t>(i)], t_min);
        tr.evals.push_back(eval_xbar(xbar_field, noise, tr.states[static_cast<std::size_t>(i)], vt));
    }
    return tr;
}

Trajectory dpm_solver_pp_2m_sample(const VelocityField& xbar_field, const std::vector<double>& x0,
                                   const std::vector<double>& grid, const NoiseSchedule& noise,
                                   double t_min) {
    check_grid(grid, "dpm_solver_pp_2m_sample");
    if (noise.kind != SchedulerKind::VPLinear)
        throw std::invalid_argument("dpm_solver_pp_2m_sample: noise schedule is not VP");
    const int steps = static_cast<int>(grid.size()) - 1;
    Trajectory tr;
    tr.times = grid;
    tr.nfe = steps;

    std::vector<double> vp_t(grid.size()), alpha(grid.size()), sigma(grid.size()), lambda(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        vp_t[i] = vp_time_of_sampling(grid[i], t_min);
        auto [a, s] = vp_alpha_sigma(noise, vp_t[i]);
        if (s <= 0.0) throw std::domain_error("dpm_solver_pp_2m_sample: sigma = 0, raise t_min");
        alpha[i] = a;
        sigma[i] = s;
        lambda[i] = std::log(a / s);
    }

    std::vector<double> x = x0;
    tr.states.push_back(x);
    for (int i = 0; i < steps; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        auto xbar = eval_xbar(xbar_field, noise, x, vp_t[u]);
        tr.evals.push_back(xbar);
        const double h = lambda[u + 1] - lambda[u];
        std::vector<double> D = xbar;
        if (i >= 1) {
            const double h_prev = lambda[u] - lambda[u - 1];
            const double r = h_prev / h;
            const auto& prev = tr.evals[u - 1];
            for (std::size_t d = 0; d < D.size(); ++d)
                D[d] = (1.0 + 1.0 / (2.0 * r)) * xbar[d] - (1.0 / (2.0 * r)) * prev[d];
        }
        const double ratio = sigma[u + 1] / sigma[u];
        const double gain = -alpha[u + 1] * (std::exp(-h) - 1.0);
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = ratio * x[d] + gain * D[d];
        detail::check_finite(x, "dpm_solver_pp_2m_sample: non-finite state");
        tr.states.push_back(x);
    }
    return tr;
}

} // namespace sforge
