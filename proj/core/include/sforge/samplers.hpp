#pragma once

#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "sforge/fields.hpp"
#include "sforge/schedules.hpp"
#include "sforge/solver_schedule.hpp"

namespace sforge {

/// Ordered (time, state) pairs produced by a sampler, with the cached
/// model outputs per step. Times live on the solver's own axis
/// (rectified-flow time or the normalized VP sampling axis).
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<std::vector<double>> evals;
    int nfe = 0;
};

struct DivergedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// x_{i+1} = x_i + (t_{i+1} - t_i) v(x_i, t_i) over a strictly increasing grid.
Trajectory euler_sample(const VelocityField& field, const std::vector<double>& x0,
                        const std::vector<double>& grid);

/// Trapezoid predictor-corrector; 2 field evaluations per step.
Trajectory heun_sample(const VelocityField& field, const std::vector<double>& x0,
                       const std::vector<double>& grid);

/// Adams-Bashforth of order k in {2,3,4} on an arbitrary strictly
/// increasing grid; per-step weights are exact integrals of the Lagrange
/// basis over [t_i, t_{i+1}]. Startup steps for k >= 3 use a single RK4
/// step so the asymptotic order is not capped by the warmup.
Trajectory adams_bashforth_sample(const VelocityField& field, const std::vector<double>& x0,
                                  const std::vector<double>& grid, int order);

/// Searched multistep solver for rectified flow:
/// x_{i+1} = x_i + dt_i * sum_j M[i][j] v_j with all past evaluations cached.
Trajectory multistep_rf_sample(const VelocityField& field, const std::vector<double>& x0,
                               const SolverSchedule& sched);

/// Searched exponential-integrator solver for VP:
/// x_{i+1} = (sigma_{i+1}/sigma_i) x_i
///           + sigma_{i+1} (omega_{i+1} - omega_i) sum_j M[i][j] xbar_j.
Trajectory multistep_vp_sample(const VelocityField& xbar_field, const std::vector<double>& x0,
                               const SolverSchedule& sched, const NoiseSchedule& noise,
                               double t_min = kDefaultVpTmin);

/// Second-order multistep baseline in half-log-SNR space with the xbar
/// parametrization; first step is first-order. Grid is on the normalized
/// sampling axis.
Trajectory dpm_solver_pp_2m_sample(const VelocityField& xbar_field, const std::vector<double>& x0,
                                   const std::vector<double>& grid, const NoiseSchedule& noise,
                                   double t_min = kDefaultVpTmin);

/// Exact integral over [a, b] of each Lagrange basis polynomial on `nodes`.
std::vector<double> lagrange_integral_weights(std::span<const double> nodes, double a, double b);

/// Uniform grid of n+1 points over [0, 1].
std::vector<double> uniform_grid(int n);

namespace detail {

template <class S>
void check_finite(const std::vector<S>& x, const char* what) {
    for (const S& v : x)
        if (!std::isfinite(primal(v))) throw DivergedError(what);
}

/// Rectified-flow rollout of the searched multistep solver on an
/// arbitrary scalar type; states[i] is x at times[i].
template <class S>
std::vector<std::vector<S>> rf_rollout(const VelocityField& field, const std::vector<double>& x0,
                                       const GenericSchedule<S>& g) {
    const int n = static_cast<int>(g.deltas.size());
    std::vector<std::vector<S>> states;
    states.reserve(static_cast<std::size_t>(n) + 1);
    std::vector<S> x;
    x.reserve(x0.size());
    for (double v : x0) x.push_back(detail::lift_like(v, g.times[0]));
    states.push_back(x);
    std::vector<std::vector<S>> evals;
    evals.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        evals.push_back(eval_velocity(field, x, g.times[static_cast<std::size_t>(i)]));
        // anchored row form: vbar = v_i + sum_j c_j (v_j - v_i); identical
        // to the full M row with diagonal 1 - sum, but the constant-field
        // case and the zero-coefficient (Euler) case stay exact
        const auto& row = g.rows[static_cast<std::size_t>(i)];
        const auto& vi = evals[static_cast<std::size_t>(i)];
        std::vector<S> vbar = vi;
        for (int j = 0; j < i; ++j) {
            const S& c = row[static_cast<std::size_t>(j)];
            // zero entries carry gradient on the tape path, only the pure
            // double path may skip them
            if constexpr (std::is_same_v<S, double>)
                if (c == 0.0) continue;
            for (std::size_t d = 0; d < x.size(); ++d)
                vbar[d] = vbar[d] + c * (evals[static_cast<std::size_t>(j)][d] - vi[d]);
        }
        S dt = g.times[static_cast<std::size_t>(i) + 1] - g.times[static_cast<std::size_t>(i)];
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = x[d] + dt * vbar[d];
        check_finite(x, "multistep rf: non-finite state");
        states.push_back(x);
    }
    return states;
}

/// VP rollout; times are on the normalized sampling axis and mapped onto
/// the VP time axis with the t_min clamp.
template <class S>
std::vector<std::vector<S>> vp_rollout(const VelocityField& xbar_field, const NoiseSchedule& ns,
                                       const std::vector<double>& x0, const GenericSchedule<S>& g,
                                       double t_min) {
    const int n = static_cast<int>(g.deltas.size());
    std::vector<std::vector<S>> states;
    states.reserve(static_cast<std::size_t>(n) + 1);
    std::vector<S> x;
    x.reserve(x0.size());
    for (double v : x0) x.push_back(detail::lift_like(v, g.times[0]));
    states.push_back(x);

    std::vector<S> sigma(static_cast<std::size_t>(n) + 1), omega(static_cast<std::size_t>(n) + 1);
    std::vector<S> vp_t(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        vp_t[static_cast<std::size_t>(i)] = vp_time_of_sampling(g.times[static_cast<std::size_t>(i)], t_min);
        S a, s;
        vp_alpha_sigma_t(ns, vp_t[static_cast<std::size_t>(i)], a, s);
        if (primal(s) <= 0.0) throw std::domain_error("multistep vp: sigma = 0, raise t_min");
        sigma[static_cast<std::size_t>(i)] = s;
        omega[static_cast<std::size_t>(i)] = a / s;
    }

    std::vector<std::vector<S>> evals;
    evals.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        evals.push_back(eval_xbar(xbar_field, ns, x, vp_t[static_cast<std::size_t>(i)]));
        const auto& row = g.rows[static_cast<std::size_t>(i)];
        const auto& xbi = evals[static_cast<std::size_t>(i)];
        std::vector<S> xbar_mix = xbi;
        for (int j = 0; j < i; ++j) {
            const S& c = row[static_cast<std::size_t>(j)];
            if constexpr (std::is_same_v<S, double>)
                if (c == 0.0) continue;
            for (std::size_t d = 0; d < x.size(); ++d)
                xbar_mix[d] = xbar_mix[d] + c * (evals[static_cast<std::size_t>(j)][d] - xbi[d]);
        }
        S ratio = sigma[static_cast<std::size_t>(i) + 1] / sigma[static_cast<std::size_t>(i)];
        S gain = sigma[static_cast<std::size_t>(i) + 1] *
                 (omega[static_cast<std::size_t>(i) + 1] - omega[static_cast<std::size_t>(i)]);
        for (std::size_t d = 0; d < x.size(); ++d)
            x[d] = ratio * x[d] + gain * xbar_mix[d];
        check_finite(x, "multistep vp: non-finite state");
        states.push_back(x);
    }
    return states;
}

} // namespace detail

/// GenericSchedule view of a validated double-precision schedule.
GenericSchedule<double> as_generic(const SolverSchedule& sched);

} // namespace sforge
