#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sforge/tape.hpp"

namespace sforge {

enum class SchedulerKind { RectifiedFlow, VPLinear };

inline const char* to_string(SchedulerKind k) {
    return k == SchedulerKind::RectifiedFlow ? "rf" : "vp";
}

/// Noise scheduler for continuous VP with linear beta, or the identity
/// forms of rectified flow.
///
/// Time conventions: rectified flow runs t=0 (pure noise) -> t=1 (data).
/// VP internal time runs the other way: t=0 is clean data (alpha=1,
/// sigma=0) and t=1 is the noisy end. Samplers map their normalized
/// sampling axis onto VP time in one place (see vp_time_of_sampling).
struct NoiseSchedule {
    SchedulerKind kind = SchedulerKind::RectifiedFlow;
    double beta_min = 0.0;
    double beta_max = 0.0;

    static NoiseSchedule rectified_flow() { return {SchedulerKind::RectifiedFlow, 0.0, 0.0}; }

    static NoiseSchedule vp_linear(double bmin, double bmax) {
        if (!(bmin > 0.0) || !(bmax > bmin))
            throw std::invalid_argument("vp_linear: need 0 < beta_min < beta_max");
        return {SchedulerKind::VPLinear, bmin, bmax};
    }

    /// The DiT schedule: linear beta in [0.1, 20].
    static NoiseSchedule dit() { return vp_linear(0.1, 20.0); }
};

/// First VP sampling time kept away from sigma=0.
inline constexpr double kDefaultVpTmin = 1e-4;

/// Closed form of the linear-beta integral: int_0^t beta_s ds.
template <class S>
S vp_beta_integral(const NoiseSchedule& ns, const S& t) {
    return ns.beta_min * t + 0.5 * (ns.beta_max - ns.beta_min) * (t * t);
}

template <class S>
void vp_alpha_sigma_t(const NoiseSchedule& ns, const S& t, S& alpha, S& sigma) {
    using std::exp;
    using std::sqrt;
    S big = vp_beta_integral(ns, t);
    alpha = exp(-0.5 * big);
    sigma = sqrt(1.0 - exp(-1.0 * big));
}

template <class S>
S vp_omega_t(const NoiseSchedule& ns, const S& t) {
    S a, s;
    vp_alpha_sigma_t(ns, t, a, s);
    return a / s;
}

template <class S>
S vp_lambda_t(const NoiseSchedule& ns, const S& t) {
    using std::log;
    return log(vp_omega_t(ns, t));
}

/// Map a normalized sampling time s in [0,1] (s=0 noise, s=1 data) onto
/// the VP time axis, clamping the data end at t_min.
template <class S>
S vp_time_of_sampling(const S& s, double t_min) {
    return 1.0 - s * (1.0 - t_min);
}

// --- checked double-precision entry points --------------------------------

inline std::pair<double, double> vp_alpha_sigma(const NoiseSchedule& ns, double t) {
    if (ns.kind != SchedulerKind::VPLinear)
        throw std::domain_error("vp_alpha_sigma: schedule is not VP");
    if (!(t >= 0.0 && t <= 1.0))
        throw std::domain_error("vp_alpha_sigma: t outside [0,1]");
    double a, s;
    vp_alpha_sigma_t(ns, t, a, s);
    return {a, s};
}

inline double vp_omega(const NoiseSchedule& ns, double t) {
    if (ns.kind != SchedulerKind::VPLinear)
        throw std::domain_error("vp_omega: schedule is not VP");
    if (!(t > 0.0 && t <= 1.0))
        throw std::domain_error("vp_omega: t must be in (0,1], omega is singular at t=0");
    return vp_omega_t(ns, t);
}

inline double vp_lambda(const NoiseSchedule& ns, double t) {
    return std::log(vp_omega(ns, t));
}

// --- timestep respacing ----------------------------------------------------

/// Degree-4 polynomial through the origin: c4 t^4 + c3 t^3 + c2 t^2 + c1 t.
struct RespacePolynomial {
    std::array<double, 4> c{};  // c[0]=c1 .. c[3]=c4

    double operator()(double t) const {
        return ((c[3] * t + c[2]) * t + c[1]) * t * t + c[0] * t;
    }
};

inline RespacePolynomial reflow_respace() { return {{0.43, -0.97, 3.51, -1.96}}; }
inline RespacePolynomial ddpm_respace() { return {{2.17, -4.744, 6.30, -2.73}}; }

inline double respace(const RespacePolynomial& poly, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::domain_error("respace: t outside [0,1]");
    return poly(t);
}

/// N+1 timesteps from uniform arguments, clamped to [0,1] and made
/// nondecreasing.
inline std::vector<double> respace_grid(const RespacePolynomial& poly, int nfe) {
    if (nfe < 1) throw std::invalid_argument("respace_grid: nfe must be >= 1");
    std::vector<double> grid(static_cast<std::size_t>(nfe) + 1);
    double prev = 0.0;
    for (int k = 0; k <= nfe; ++k) {
        double v = poly(static_cast<double>(k) / nfe);
        v = std::min(1.0, std::max(0.0, v));
        v = std::max(v, prev);
        grid[static_cast<std::size_t>(k)] = v;
        prev = v;
    }
    return grid;
}

} // namespace sforge
