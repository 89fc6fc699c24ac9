#include <doctest.h>

#include <cmath>

#include "sforge/rng.hpp"
#include "sforge/solver_schedule.hpp"

using namespace sforge;

namespace {

std::vector<std::vector<double>> zero_coeffs(int n) {
    std::vector<std::vector<double>> c(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
    for (int i = 1; i < n; ++i) c[static_cast<std::size_t>(i) - 1].assign(static_cast<std::size_t>(i), 0.0);
    return c;
}

} // namespace

TEST_CASE("uniform raw_r with zero coefficients is the Euler solver") {
    auto s = build_schedule(std::vector<double>(5, 1.0), zero_coeffs(5),
                            SchedulerKind::RectifiedFlow);
    CHECK(s.nfe == 5);
    for (double d : s.deltas) CHECK(d == doctest::Approx(0.2).epsilon(1e-15));
    for (int i = 0; i < 5; ++i) {
        CHECK(s.m(i, i) == 1.0);
        for (int j = 0; j < i; ++j) CHECK(s.m(i, j) == 0.0);
    }
    CHECK(s.times.front() == 0.0);
    CHECK(s.times.back() == 1.0);
}

TEST_CASE("two-step softmax") {
    auto s = build_schedule({1.0, 2.0}, zero_coeffs(2), SchedulerKind::RectifiedFlow);
    CHECK(s.deltas[0] == doctest::Approx(0.26894142136999510).epsilon(1e-12));
    CHECK(s.deltas[1] == doctest::Approx(0.73105857863000490).epsilon(1e-12));
    CHECK(s.deltas[0] + s.deltas[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("diagonal is the complement of the row") {
    // the published 5-step table row: c = -1.17 -> M row [-1.17, 2.17]
    auto s = schedule_from_parts(SchedulerKind::RectifiedFlow,
                                 {0.0424 / 1.0001, 0.1225 / 1.0001, 0.2144 / 1.0001,
                                  0.3073 / 1.0001, 0.3135 / 1.0001 + 1e-17},
                                 {{-1.17}, {1.07, -1.83}, {0.0, 0.0, -0.93}, {0.0, 0.0, 0.0, -0.71}},
                                 1e-4);
    CHECK(s.m(1, 0) == -1.17);
    CHECK(s.m(1, 1) == doctest::Approx(2.17).epsilon(1e-15));
    for (int i = 0; i < s.nfe; ++i) CHECK(s.row_sums_to_one(i));
}

TEST_CASE("row sums are exact even for extreme coefficients") {
    // -7.8801 has no single-double complement whose float sum is exactly 1;
    // the double-double diagonal must still balance the row
    auto s = schedule_from_parts(SchedulerKind::RectifiedFlow, {0.5, 0.5}, {{-7.8801}});
    CHECK(s.row_sums_to_one(0));
    CHECK(s.row_sums_to_one(1));
    CHECK(s.m(1, 1) == doctest::Approx(8.8801).epsilon(1e-15));
}

TEST_CASE("random schedules keep exact row sums") {
    CounterRng rng(2024, 0);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng.below(9));
        std::vector<double> raw_r(static_cast<std::size_t>(n));
        for (double& v : raw_r) v = 2.0 * rng.normal();
        auto raw_c = zero_coeffs(n);
        for (auto& row : raw_c)
            for (double& v : row) v = 3.0 * rng.normal();
        auto s = build_schedule(raw_r, raw_c, SchedulerKind::RectifiedFlow);
        double dsum = 0.0;
        for (double d : s.deltas) {
            CHECK(d > 0.0);
            dsum += d;
        }
        CHECK(dsum == doctest::Approx(1.0).epsilon(1e-14));
        for (int i = 0; i < n; ++i) CHECK(s.row_sums_to_one(i));
        CHECK(s.times.back() == 1.0);
    }
}

TEST_CASE("error amplification matches a hand computation") {
    auto s = schedule_from_parts(SchedulerKind::RectifiedFlow, {0.25, 0.75}, {{-0.5}});
    // rows: [1], [-0.5, 1.5]; sum_i dt_i sum_j |m| = 0.25*1 + 0.75*2 = 1.75
    CHECK(s.error_amplification() == doctest::Approx(1.75).epsilon(1e-15));
}

TEST_CASE("max_order masks early coefficients") {
    std::vector<double> raw_r(4, 1.0);
    auto raw_c = zero_coeffs(4);
    for (auto& row : raw_c)
        for (double& v : row) v = 0.5;
    auto cap = last_two_rows_cap(4, 1);
    auto s = build_schedule(raw_r, raw_c, SchedulerKind::RectifiedFlow, cap);
    CHECK(s.m(1, 0) == 0.5);          // uncapped row
    CHECK(s.m(2, 0) == 0.0);          // capped to lookback 1
    CHECK(s.m(2, 1) == 0.5);
    CHECK(s.m(3, 0) == 0.0);
    CHECK(s.m(3, 1) == 0.0);
    CHECK(s.m(3, 2) == 0.5);
    for (int i = 0; i < 4; ++i) CHECK(s.row_sums_to_one(i));
}

TEST_CASE("validation rejects malformed inputs") {
    CHECK_THROWS_AS(build_schedule({}, {}, SchedulerKind::RectifiedFlow), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule({1.0, std::nan("")}, zero_coeffs(2), SchedulerKind::RectifiedFlow),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_schedule({1.0, 1.0}, {{0.1, 0.2}}, SchedulerKind::RectifiedFlow),
                    std::invalid_argument);
    CHECK_THROWS_AS(schedule_from_parts(SchedulerKind::RectifiedFlow, {0.4, 0.4}, {{0.0}}),
                    std::invalid_argument);  // sum != 1
    CHECK_THROWS_AS(schedule_from_parts(SchedulerKind::RectifiedFlow, {1.2, -0.2}, {{0.0}}),
                    std::invalid_argument);  // negative delta
}

TEST_CASE("single-step schedule is valid") {
    auto s = build_schedule({1.0}, {}, SchedulerKind::RectifiedFlow);
    CHECK(s.nfe == 1);
    CHECK(s.deltas[0] == 1.0);
    CHECK(s.m(0, 0) == 1.0);
    CHECK(s.row_sums_to_one(0));
}
