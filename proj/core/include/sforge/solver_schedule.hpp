#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sforge/schedules.hpp"

namespace sforge {

struct Provenance {
    std::string source = "manual";  // "paper_table" | "searched" | "manual"
    std::string config_hash;
    std::uint64_t seed = 0;
    double renorm = 1.0;  // factor applied to the stored deltas on load
};

namespace detail {

/// Double-double helpers. A published coefficient row can sum to a value
/// like -7.8801 whose complement to 1 is not representable in one double;
/// carrying the TwoSum error term keeps row sums exact.
struct DD {
    double hi = 0.0, lo = 0.0;
};

inline DD two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

inline DD dd_add(DD a, double b) {
    DD s = two_sum(a.hi, b);
    return two_sum(s.hi, a.lo + s.lo);
}

inline DD dd_add(DD a, DD b) { return dd_add(dd_add(a, b.hi), b.lo); }

} // namespace detail

/// A compact solver: N time deltas plus a lower-triangular coefficient
/// matrix M combining the cached model outputs. Row i of M is
/// [c_i^0 .. c_i^{i-1}, 1 - sum], so every row sums to exactly 1; the
/// diagonal is kept as a double-double pair because the complement of a
/// large coefficient sum is not always a single double.
struct SolverSchedule {
    SchedulerKind kind = SchedulerKind::RectifiedFlow;
    int nfe = 0;
    std::vector<double> deltas;                   // N, all > 0, sum 1
    std::vector<std::vector<double>> coeff_rows;  // row i (1-based) has i entries
    std::vector<double> diag;                     // N diagonal entries (leading part)
    std::vector<double> diag_lo;                  // TwoSum error of each diagonal
    std::vector<double> times;                    // N+1 cumulative, t0=0, tN=1
    std::vector<int> max_order;                   // per-row lookback cap, 0 = unlimited
    std::string model_tag;
    Provenance provenance;

    double m(int i, int j) const {
        if (j > i) return 0.0;
        if (j == i) return diag[static_cast<std::size_t>(i)];
        if (i == 0) return 0.0;
        return coeff_rows[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j)];
    }

    /// Exact row-sum test: coefficients plus the double-double diagonal
    /// accumulate to 1 with zero residual.
    bool row_sums_to_one(int i) const {
        detail::DD s{};
        if (i > 0)
            for (double c : coeff_rows[static_cast<std::size_t>(i) - 1]) s = detail::dd_add(s, c);
        s = detail::dd_add(s, detail::DD{diag[static_cast<std::size_t>(i)],
                                         diag_lo[static_cast<std::size_t>(i)]});
        return s.hi == 1.0 && s.lo == 0.0;
    }

    std::vector<std::vector<double>> matrix() const {
        std::vector<std::vector<double>> M(static_cast<std::size_t>(nfe));
        for (int i = 0; i < nfe; ++i) {
            M[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(nfe), 0.0);
            for (int j = 0; j <= i; ++j) M[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
        }
        return M;
    }

    /// Sum of |M[i][j]| * delta_i over the full lower triangle, the
    /// amplification factor of a bounded model error.
    double error_amplification() const {
        double total = 0.0;
        for (int i = 0; i < nfe; ++i) {
            double row = 0.0;
            for (int j = 0; j <= i; ++j) row += std::abs(m(i, j));
            total += row * deltas[static_cast<std::size_t>(i)];
        }
        return total;
    }
};

/// True when the strictly-lower entry (i, j) is allowed under the row's
/// lookback cap (cap k keeps only the k most recent past evaluations).
inline bool coeff_allowed(int i, int j, const std::vector<int>& max_order) {
    if (max_order.empty()) return true;
    int cap = max_order[static_cast<std::size_t>(i)];
    return cap <= 0 || (i - j) <= cap;
}

/// A per-row cap vector limiting the last two rows to `cap` past
/// evaluations each (the published 5/6-step solvers have this shape).
inline std::vector<int> last_two_rows_cap(int nfe, int cap) {
    std::vector<int> v(static_cast<std::size_t>(nfe), 0);
    if (nfe >= 2) v[static_cast<std::size_t>(nfe) - 2] = cap;
    if (nfe >= 1) v[static_cast<std::size_t>(nfe) - 1] = cap;
    return v;
}

namespace detail {

template <class S>
std::vector<S> softmax(const std::vector<S>& r) {
    using std::exp;
    double hi = primal(r[0]);
    for (const S& x : r) hi = std::max(hi, primal(x));
    std::vector<S> e;
    e.reserve(r.size());
    for (const S& x : r) e.push_back(exp(x - hi));
    S total = e[0];
    for (std::size_t i = 1; i < e.size(); ++i) total = total + e[i];
    std::vector<S> out;
    out.reserve(r.size());
    for (const S& x : e) out.push_back(x / total);
    return out;
}

} // namespace detail

/// Schedule carried on an arbitrary scalar type; the differentiable twin
/// of SolverSchedule used inside the search. Only the strictly-lower
/// coefficients are stored: samplers apply rows in the anchored form
/// v_i + sum_j c_j (v_j - v_i), which is algebraically the same as the
/// full M row (diagonal = 1 - sum) but transports constants exactly.
template <class S>
struct GenericSchedule {
    std::vector<S> deltas;
    std::vector<S> times;                 // N+1, cumulative from 0
    std::vector<std::vector<S>> rows;     // row i has i strictly-lower entries
};

/// Alg-style parametrization: deltas = softmax(raw_r), strict-lower
/// coefficients from raw_c masked by the per-row cap.
template <class S>
GenericSchedule<S> parametrize(const std::vector<S>& raw_r,
                               const std::vector<std::vector<S>>& raw_c,
                               const std::vector<int>& max_order = {}) {
    const int n = static_cast<int>(raw_r.size());
    GenericSchedule<S> g;
    g.deltas = detail::softmax(raw_r);
    g.times.reserve(static_cast<std::size_t>(n) + 1);
    S t = 0.0 * raw_r[0];  // zero of the right scalar type
    g.times.push_back(t);
    for (int i = 0; i < n; ++i) {
        t = t + g.deltas[static_cast<std::size_t>(i)];
        g.times.push_back(t);
    }
    g.rows.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& row = g.rows[static_cast<std::size_t>(i)];
        row.reserve(static_cast<std::size_t>(i));
        for (int j = 0; j < i; ++j) {
            if (coeff_allowed(i, j, max_order)) {
                row.push_back(raw_c[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j)]);
            } else {
                row.push_back(0.0 * raw_r[0]);
            }
        }
    }
    return g;
}

/// Validated double-precision schedule from raw search parameters.
SolverSchedule build_schedule(const std::vector<double>& raw_r,
                              const std::vector<std::vector<double>>& raw_c,
                              SchedulerKind kind,
                              const std::vector<int>& max_order = {});

/// Schedule from already-derived deltas and strict-lower coefficients
/// (registry loads, tests). Deltas must be positive and sum to 1 within
/// `delta_sum_tol`; they are not renormalized here.
SolverSchedule schedule_from_parts(SchedulerKind kind,
                                   std::vector<double> deltas,
                                   std::vector<std::vector<double>> coeff_rows,
                                   double delta_sum_tol = 1e-9);

} // namespace sforge
