#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sforge/rng.hpp"
#include "sforge/schedules.hpp"
#include "sforge/tape.hpp"

namespace sforge {

/// Analytic stand-ins for a pre-trained model. For rectified flow the
/// field evaluates the velocity E[x0 - eps | x_t]; for VP it evaluates the
/// clean-sample prediction E[x0 | x_t]. All closed forms are exact for
/// Gaussian / Gaussian-mixture data.
struct VelocityField {
    enum class Kind { Constant, Linear, SineLinear, Gaussian, GaussianMixture2D, Perturbed };

    struct MixtureComponent {
        double weight;
        std::array<double, 2> mu;
        double scale;
    };

    // one smooth seeded sinusoid feeding the perturbation of a coordinate
    struct Sinusoid {
        int target;   // perturbed coordinate
        int xcoord;   // state coordinate it reads
        double amp, kx, kt, phase;
    };

    Kind kind = Kind::Constant;
    int dim = 1;
    std::vector<double> constant;               // Constant
    std::vector<double> mat;                    // Linear, row-major dim x dim
    std::vector<double> mu;                     // Gaussian
    double scale = 1.0;                         // Gaussian
    std::vector<MixtureComponent> mixture;      // GaussianMixture2D
    std::shared_ptr<const VelocityField> base;  // Perturbed
    double eta = 0.0;
    std::uint64_t perturb_seed = 0;
    std::vector<Sinusoid> sinusoids;

    static VelocityField constant_field(std::vector<double> c);
    static VelocityField identity_linear(int d);   // v = x
    static VelocityField linear(std::vector<double> a, int d);
    static VelocityField sine_linear(int d);       // v = sin(2 pi t) * x
    static VelocityField gaussian(std::vector<double> mean, double s);
    static VelocityField gmm2d(std::vector<MixtureComponent> comps);
    static VelocityField perturbed(VelocityField base_field, double eta, std::uint64_t seed);
};

namespace detail {

template <class S>
S lift_like(double v, const S& like) {
    return 0.0 * like + v;
}
inline double lift_like(double v, const double&) { return v; }

template <class S>
std::vector<S> rf_gaussian_velocity_t(const std::vector<double>& mu, double s,
                                      const std::vector<S>& x, const S& t) {
    // v = mu + (t s^2 - (1-t)) (x - t mu) / (t^2 s^2 + (1-t)^2)
    const double s2 = s * s;
    S one_m_t = 1.0 - t;
    S var = (t * t) * s2 + one_m_t * one_m_t;
    S coef = (t * s2 - one_m_t) / var;
    std::vector<S> v;
    v.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        v.push_back(mu[i] + coef * (x[i] - t * mu[i]));
    return v;
}

template <class S>
std::vector<S> eval_velocity_impl(const VelocityField& f, const std::vector<S>& x, const S& t);

template <class S>
std::vector<S> rf_gmm2d_velocity_t(const std::vector<VelocityField::MixtureComponent>& comps,
                                   const std::vector<S>& x, const S& t) {
    using std::exp;
    using std::log;
    // posterior weights ~ w_k N(x; t mu_k, var_k I), combined in log space
    const std::size_t K = comps.size();
    std::vector<S> logw;
    logw.reserve(K);
    S one_m_t = 1.0 - t;
    for (const auto& c : comps) {
        S var = (t * t) * (c.scale * c.scale) + one_m_t * one_m_t;
        S q = detail::lift_like(0.0, t);
        for (std::size_t i = 0; i < 2; ++i) {
            S d = x[i] - t * c.mu[i];
            q = q + d * d;
        }
        logw.push_back(std::log(c.weight) - 0.5 * (q / var) - log(var));
    }
    double hi = primal(logw[0]);
    for (const S& lw : logw) hi = std::max(hi, primal(lw));
    std::vector<S> w;
    w.reserve(K);
    S total = detail::lift_like(0.0, t);
    for (const S& lw : logw) {
        S e = exp(lw - hi);
        w.push_back(e);
        total = total + e;
    }
    std::vector<S> v(2, detail::lift_like(0.0, t));
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> mu(comps[k].mu.begin(), comps[k].mu.end());
        auto vk = rf_gaussian_velocity_t(mu, comps[k].scale, x, t);
        S pk = w[k] / total;
        for (std::size_t i = 0; i < 2; ++i) v[i] = v[i] + pk * vk[i];
    }
    return v;
}

template <class S>
std::vector<S> eval_velocity_impl(const VelocityField& f, const std::vector<S>& x, const S& t) {
    using std::sin;
    switch (f.kind) {
        case VelocityField::Kind::Constant: {
            std::vector<S> v;
            v.reserve(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                v.push_back(detail::lift_like(f.constant[i], t));
            return v;
        }
        case VelocityField::Kind::Linear: {
            std::vector<S> v;
            v.reserve(x.size());
            for (int i = 0; i < f.dim; ++i) {
                S acc = f.mat[static_cast<std::size_t>(i * f.dim)] * x[0];
                for (int j = 1; j < f.dim; ++j)
                    acc = acc + f.mat[static_cast<std::size_t>(i * f.dim + j)] * x[static_cast<std::size_t>(j)];
                v.push_back(acc);
            }
            return v;
        }
        case VelocityField::Kind::SineLinear: {
            S g = sin(6.283185307179586476925286766559 * t);
            std::vector<S> v;
            v.reserve(x.size());
            for (const S& xi : x) v.push_back(g * xi);
            return v;
        }
        case VelocityField::Kind::Gaussian: {
            if (f.scale == 0.0 && primal(t) >= 1.0)
                throw std::domain_error("rf_gaussian_velocity: singular at t=1 with s=0");
            return rf_gaussian_velocity_t(f.mu, f.scale, x, t);
        }
        case VelocityField::Kind::GaussianMixture2D:
            return rf_gmm2d_velocity_t(f.mixture, x, t);
        case VelocityField::Kind::Perturbed: {
            using std::tanh;
            auto v = eval_velocity_impl(*f.base, x, t);
            const double unit = f.eta / f.dim;
            for (int i = 0; i < f.dim; ++i) {
                S h = detail::lift_like(0.0, t);
                for (const auto& sn : f.sinusoids) {
                    if (sn.target != i) continue;
                    h = h + sn.amp * sin(sn.kx * x[static_cast<std::size_t>(sn.xcoord)] + sn.kt * t + sn.phase);
                }
                v[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)] + unit * tanh(h);
            }
            return v;
        }
    }
    throw std::logic_error("eval_velocity: unknown field kind");
}

template <class S>
std::vector<S> eval_xbar_impl(const VelocityField& f, const NoiseSchedule& ns,
                              const std::vector<S>& x, const S& t) {
    switch (f.kind) {
        case VelocityField::Kind::Constant: {
            std::vector<S> v;
            v.reserve(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                v.push_back(detail::lift_like(f.constant[i], t));
            return v;
        }
        case VelocityField::Kind::Gaussian: {
            // xbar = mu + alpha s^2 (x - alpha mu) / (alpha^2 s^2 + sigma^2)
            S alpha, sigma;
            vp_alpha_sigma_t(ns, t, alpha, sigma);
            const double s2 = f.scale * f.scale;
            S denom = (alpha * alpha) * s2 + sigma * sigma;
            S coef = (alpha * s2) / denom;
            std::vector<S> v;
            v.reserve(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                v.push_back(f.mu[i] + coef * (x[i] - alpha * f.mu[i]));
            return v;
        }
        case VelocityField::Kind::Perturbed: {
            using std::sin;
            using std::tanh;
            auto v = eval_xbar_impl(*f.base, ns, x, t);
            const double unit = f.eta / f.dim;
            for (int i = 0; i < f.dim; ++i) {
                S h = detail::lift_like(0.0, t);
                for (const auto& sn : f.sinusoids) {
                    if (sn.target != i) continue;
                    h = h + sn.amp * sin(sn.kx * x[static_cast<std::size_t>(sn.xcoord)] + sn.kt * t + sn.phase);
                }
                v[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)] + unit * tanh(h);
            }
            return v;
        }
        default:
            throw std::domain_error("eval_xbar: field kind has no xbar form");
    }
}

} // namespace detail

template <class S>
std::vector<S> eval_velocity(const VelocityField& f, const std::vector<S>& x, const S& t) {
    return detail::eval_velocity_impl(f, x, t);
}

template <class S>
std::vector<S> eval_xbar(const VelocityField& f, const NoiseSchedule& ns,
                         const std::vector<S>& x, const S& t) {
    return detail::eval_xbar_impl(f, ns, x, t);
}

// double-precision conveniences matching the closed forms above
std::vector<double> rf_gaussian_velocity(const std::vector<double>& mu, double s,
                                         const std::vector<double>& x, double t);
std::vector<double> rf_gmm2d_velocity(const std::vector<VelocityField::MixtureComponent>& comps,
                                      const std::vector<double>& x, double t);
std::vector<double> vp_gaussian_xbar(const std::vector<double>& mu, double s,
                                     const NoiseSchedule& ns,
                                     const std::vector<double>& x, double t);

/// A named fixture: field plus its scheduler.
struct Problem {
    std::string name;
    SchedulerKind kind = SchedulerKind::RectifiedFlow;
    NoiseSchedule noise = NoiseSchedule::rectified_flow();
    VelocityField field;
    double vp_t_min = kDefaultVpTmin;
};

/// Builtin fixtures: const2d, linear, sine, gauss, gmm2d, vpgauss, vpconst.
Problem builtin_problem(const std::string& name);

/// Problem description file (same key/value grammar as schedule files).
Problem load_problem(const std::string& path);

/// Resolve a --problem argument: builtin name or path to a problem file.
Problem resolve_problem(const std::string& name_or_path);

/// Endpoint of a brute-force high-resolution integration: uniform-grid
/// Euler for rectified flow, first-order exponential integrator for VP.
/// The ground truth for every endpoint-error metric.
std::vector<double> oracle_endpoint(const Problem& p, const std::vector<double>& x0, int steps);

/// Full dense oracle trajectory on the (sampling-axis) uniform grid.
struct Trajectory;
Trajectory oracle_trajectory(const Problem& p, const std::vector<double>& x0, int steps);

} // namespace sforge
