#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sforge/fields.hpp"
#include "sforge/samplers.hpp"
#include "sforge/solver_schedule.hpp"

namespace sforge {

struct SearchConfig {
    int nfe = 10;
    int ref_steps = 100;       // L-step reference trajectory, L >= nfe
    int batch = 512;
    int iterations = 300;
    double lr = 0.01;
    std::uint64_t seed = 0;
    std::vector<int> max_order;  // per-row lookback cap, empty = unlimited
    double w_mse = 1.0;
    double w_huber = 1.0;
    double huber_delta = 1.0;
    double lion_beta1 = 0.9;
    double lion_beta2 = 0.99;

    void validate() const;
    std::string hash() const;  // stable fingerprint for provenance
};

/// L-step reference trajectory on the uniform grid: Euler for rectified
/// flow, first-order exponential integrator for VP.
Trajectory reference_trajectory(const Problem& p, const std::vector<double>& x0, int ref_steps);

namespace detail {

/// Trajectory-alignment loss against a reference on the same axis:
/// w_mse * mean over interior source states of the per-element squared gap
/// to the time-interpolated reference, plus w_huber * Huber(|x_N - ref(1)|).
template <class S>
S alignment_loss_t(const std::vector<std::vector<S>>& states, const std::vector<S>& times,
                   const Trajectory& ref, const SearchConfig& cfg, S* mse_out, S* huber_out) {
    using std::sqrt;
    const int n = static_cast<int>(states.size()) - 1;
    const int L = static_cast<int>(ref.states.size()) - 1;
    const std::size_t dim = states[0].size();

    auto ref_at = [&](const S& t, std::size_t d) -> S {
        double tp = primal(t);
        int k = static_cast<int>(tp * L);
        k = std::max(0, std::min(k, L - 1));
        double lo = ref.states[static_cast<std::size_t>(k)][d];
        double hi = ref.states[static_cast<std::size_t>(k) + 1][d];
        // frac = t*L - k, constant segment chosen from the primal value
        return lo + (t * static_cast<double>(L) - static_cast<double>(k)) * (hi - lo);
    };

    S mse = detail::lift_like(0.0, times[0]);
    if (n >= 2) {
        for (int i = 1; i < n; ++i) {
            for (std::size_t d = 0; d < dim; ++d) {
                S e = states[static_cast<std::size_t>(i)][d] - ref_at(times[static_cast<std::size_t>(i)], d);
                mse = mse + e * e;
            }
        }
        mse = mse / (static_cast<double>(n - 1) * static_cast<double>(dim));
    }

    S sumsq = detail::lift_like(0.0, times[0]);
    for (std::size_t d = 0; d < dim; ++d) {
        S e = states[static_cast<std::size_t>(n)][d] - ref.states.back()[d];
        sumsq = sumsq + e * e;
    }
    const double delta = cfg.huber_delta;
    S huber = detail::lift_like(0.0, times[0]);
    if (primal(sumsq) <= delta * delta) {
        huber = 0.5 * sumsq;
    } else {
        huber = delta * (sqrt(sumsq) - 0.5 * delta);
    }

    if (mse_out) *mse_out = mse;
    if (huber_out) *huber_out = huber;
    return cfg.w_mse * mse + cfg.w_huber * huber;
}

} // namespace detail

/// Double-precision alignment loss between two trajectories on the same axis.
double alignment_loss(const Trajectory& source, const Trajectory& reference,
                      const SearchConfig& cfg);

struct GradResult {
    double loss = 0.0, mse = 0.0, huber = 0.0;
    std::vector<double> d_raw_r;
    std::vector<std::vector<double>> d_raw_c;
    bool finite = true;
};

/// Batch-mean loss and its gradients w.r.t. the raw schedule parameters,
/// obtained by reverse-mode differentiation through the unrolled sampler.
GradResult grad_schedule(const Problem& p, const std::vector<std::vector<double>>& x0_batch,
                         const SearchConfig& cfg, const std::vector<double>& raw_r,
                         const std::vector<std::vector<double>>& raw_c);

/// Batch-mean loss only (the forward half of grad_schedule; used by
/// finite-difference checks and reporting).
double search_loss(const Problem& p, const std::vector<std::vector<double>>& x0_batch,
                   const SearchConfig& cfg, const std::vector<double>& raw_r,
                   const std::vector<std::vector<double>>& raw_c);

/// Sign-momentum update, no weight decay:
///   params -= lr * sign(b1 * m + (1 - b1) * g);  m = b2 * m + (1 - b2) * g.
void lion_step(std::vector<double>& params, const std::vector<double>& grads,
               std::vector<double>& momentum, double lr, double beta1, double beta2);

struct HistoryRow {
    int iteration;
    double loss, mse, huber, grad_norm;
};

struct SearchResult {
    SolverSchedule schedule;       // best-loss schedule seen
    std::vector<HistoryRow> history;
    double initial_loss = 0.0;
    double best_loss = 0.0;
    bool diverged = false;
};

/// Differentiable solver search: raw_r starts at 1, raw_c at 0 (the Euler
/// solver), fresh noise is drawn each iteration from the seeded stream,
/// and the best-loss parameters are returned. Deterministic given the seed.
SearchResult run_search(const Problem& p, const SearchConfig& cfg);

/// x0 batch for one search iteration; iteration indices are separate
/// streams so draws are independent of batch size layout changes.
std::vector<std::vector<double>> draw_batch(std::uint64_t seed, std::uint64_t stream,
                                            int batch, int dim);

} // namespace sforge
