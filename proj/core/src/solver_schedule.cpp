#include "sforge/solver_schedule.hpp"

#include <cmath>

namespace sforge {

namespace {

void finalize_times(SolverSchedule& s) {
    s.times.resize(static_cast<std::size_t>(s.nfe) + 1);
    s.times[0] = 0.0;
    double t = 0.0;
    for (int i = 0; i < s.nfe; ++i) {
        t += s.deltas[static_cast<std::size_t>(i)];
        s.times[static_cast<std::size_t>(i) + 1] = t;
    }
    s.times[static_cast<std::size_t>(s.nfe)] = 1.0;
}

void finalize_diag(SolverSchedule& s) {
    s.diag.resize(static_cast<std::size_t>(s.nfe));
    s.diag_lo.resize(static_cast<std::size_t>(s.nfe));
    s.diag[0] = 1.0;
    s.diag_lo[0] = 0.0;
    for (int i = 1; i < s.nfe; ++i) {
        detail::DD sum{};
        for (double c : s.coeff_rows[static_cast<std::size_t>(i) - 1])
            sum = detail::dd_add(sum, c);
        detail::DD d = detail::dd_add(detail::DD{1.0, 0.0}, detail::DD{-sum.hi, -sum.lo});
        s.diag[static_cast<std::size_t>(i)] = d.hi;
        s.diag_lo[static_cast<std::size_t>(i)] = d.lo;
    }
}

} // namespace

SolverSchedule build_schedule(const std::vector<double>& raw_r,
                              const std::vector<std::vector<double>>& raw_c,
                              SchedulerKind kind,
                              const std::vector<int>& max_order) {
    const int n = static_cast<int>(raw_r.size());
    if (n < 1) throw std::invalid_argument("build_schedule: empty raw_r");
    if (static_cast<int>(raw_c.size()) != std::max(0, n - 1))
        throw std::invalid_argument("build_schedule: raw_c must have nfe-1 rows");
    for (double r : raw_r)
        if (!std::isfinite(r)) throw std::invalid_argument("build_schedule: non-finite raw_r");
    for (int i = 1; i < n; ++i) {
        const auto& row = raw_c[static_cast<std::size_t>(i) - 1];
        if (static_cast<int>(row.size()) != i)
            throw std::invalid_argument("build_schedule: raw_c row " + std::to_string(i) +
                                        " must have " + std::to_string(i) + " entries");
        for (double c : row)
            if (!std::isfinite(c)) throw std::invalid_argument("build_schedule: non-finite raw_c");
    }
    if (!max_order.empty()) {
        if (static_cast<int>(max_order.size()) != n)
            throw std::invalid_argument("build_schedule: max_order must have nfe entries");
        for (int c : max_order)
            if (c < 0) throw std::invalid_argument("build_schedule: max_order entries must be >= 0");
    }

    SolverSchedule s;
    s.kind = kind;
    s.nfe = n;
    s.max_order = max_order;
    s.deltas = detail::softmax(raw_r);
    s.coeff_rows.resize(static_cast<std::size_t>(n) - (n > 0 ? 1 : 0));
    for (int i = 1; i < n; ++i) {
        auto& row = s.coeff_rows[static_cast<std::size_t>(i) - 1];
        row.resize(static_cast<std::size_t>(i));
        for (int j = 0; j < i; ++j)
            row[static_cast<std::size_t>(j)] =
                coeff_allowed(i, j, max_order) ? raw_c[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j)] : 0.0;
    }
    finalize_diag(s);
    finalize_times(s);
    return s;
}

SolverSchedule schedule_from_parts(SchedulerKind kind,
                                   std::vector<double> deltas,
                                   std::vector<std::vector<double>> coeff_rows,
                                   double delta_sum_tol) {
    const int n = static_cast<int>(deltas.size());
    if (n < 1) throw std::invalid_argument("schedule_from_parts: empty deltas");
    double sum = 0.0;
    for (double d : deltas) {
        if (!(d > 0.0)) throw std::invalid_argument("schedule_from_parts: deltas must be positive");
        sum += d;
    }
    if (std::abs(sum - 1.0) > delta_sum_tol)
        throw std::invalid_argument("schedule_from_parts: deltas sum " + std::to_string(sum) +
                                    " outside tolerance");
    if (static_cast<int>(coeff_rows.size()) != n - 1)
        throw std::invalid_argument("schedule_from_parts: expected nfe-1 coefficient rows");
    for (int i = 1; i < n; ++i)
        if (static_cast<int>(coeff_rows[static_cast<std::size_t>(i) - 1].size()) != i)
            throw std::invalid_argument("schedule_from_parts: row " + std::to_string(i) +
                                        " must have " + std::to_string(i) + " entries");

    SolverSchedule s;
    s.kind = kind;
    s.nfe = n;
    s.deltas = std::move(deltas);
    s.coeff_rows = std::move(coeff_rows);
    finalize_diag(s);
    finalize_times(s);
    return s;
}

} // namespace sforge
