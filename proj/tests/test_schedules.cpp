#include <doctest.h>

#include <cmath>

#include "sforge/schedules.hpp"

using namespace sforge;

TEST_CASE("vp alpha/sigma closed form matches numeric quadrature") {
    // independent oracle: alpha_t = exp(-0.5 * int_0^t beta), with the
    // integral done by Simpson's rule on a fine grid
    auto ns = NoiseSchedule::dit();
    for (double t : {0.1, 0.25, 0.5, 0.75, 1.0}) {
        const int n = 20000;  // even
        double h = t / n;
        auto beta = [&](double u) { return ns.beta_min + (ns.beta_max - ns.beta_min) * u; };
        double integral = beta(0.0) + beta(t);
        for (int i = 1; i < n; ++i) integral += (i % 2 ? 4.0 : 2.0) * beta(i * h);
        integral *= h / 3.0;
        auto [a, s] = vp_alpha_sigma(ns, t);
        CHECK(a == doctest::Approx(std::exp(-0.5 * integral)).epsilon(1e-12));
        CHECK(s == doctest::Approx(std::sqrt(1.0 - std::exp(-integral))).epsilon(1e-12));
    }
}

TEST_CASE("vp endpoints") {
    auto ns = NoiseSchedule::dit();
    auto [a0, s0] = vp_alpha_sigma(ns, 0.0);
    CHECK(a0 == 1.0);
    CHECK(s0 == 0.0);
    // int_0^1 beta = 0.1 + (20 - 0.1)/2 = 10.05; alpha(1) = exp(-5.025)
    auto [a1, s1] = vp_alpha_sigma(ns, 1.0);
    CHECK(a1 == doctest::Approx(std::exp(-5.025)).epsilon(1e-14));
    CHECK(a1 * a1 + s1 * s1 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("vp checked entry points reject bad arguments") {
    auto rf = NoiseSchedule::rectified_flow();
    auto ns = NoiseSchedule::dit();
    CHECK_THROWS_AS((void)vp_alpha_sigma(rf, 0.5), std::domain_error);
    CHECK_THROWS_AS((void)vp_alpha_sigma(ns, -0.1), std::domain_error);
    CHECK_THROWS_AS((void)vp_alpha_sigma(ns, 1.1), std::domain_error);
    CHECK_THROWS_AS((void)vp_omega(ns, 0.0), std::domain_error);  // singular
    CHECK_THROWS_AS(NoiseSchedule::vp_linear(0.0, 20.0), std::invalid_argument);
    CHECK_THROWS_AS(NoiseSchedule::vp_linear(1.0, 0.5), std::invalid_argument);
}

TEST_CASE("omega and lambda are monotone decreasing in vp time") {
    auto ns = NoiseSchedule::dit();
    double prev = vp_omega(ns, 0.05);
    for (double t = 0.1; t <= 1.0; t += 0.05) {
        double w = vp_omega(ns, t);
        CHECK(w < prev);
        CHECK(vp_lambda(ns, t) == doctest::Approx(std::log(w)));
        prev = w;
    }
}

TEST_CASE("sampling-axis mapping hits both ends") {
    CHECK(vp_time_of_sampling(0.0, 1e-4) == 1.0);
    CHECK(vp_time_of_sampling(1.0, 1e-4) == doctest::Approx(1e-4));
    CHECK(kDefaultVpTmin == 1e-4);
}

TEST_CASE("respacing polynomials match their published coefficients") {
    auto rf = reflow_respace();
    auto dp = ddpm_respace();
    CHECK(rf(0.0) == 0.0);
    CHECK(dp(0.0) == 0.0);
    CHECK(rf(1.0) == doctest::Approx(1.01).epsilon(1e-12));
    CHECK(dp(1.0) == doctest::Approx(0.996).epsilon(1e-12));
    // spot value by direct polynomial evaluation
    double t = 0.3;
    CHECK(rf(t) == doctest::Approx(0.43 * t - 0.97 * t * t + 3.51 * t * t * t -
                                   1.96 * t * t * t * t));
    CHECK(dp(t) == doctest::Approx(2.17 * t - 4.744 * t * t + 6.30 * t * t * t -
                                   2.73 * t * t * t * t));
}

TEST_CASE("respace grids are clamped and nondecreasing") {
    for (int nfe : {1, 2, 4, 10, 50}) {
        for (auto poly : {reflow_respace(), ddpm_respace()}) {
            auto grid = respace_grid(poly, nfe);
            CHECK(grid.size() == static_cast<std::size_t>(nfe) + 1);
            CHECK(grid.front() == 0.0);
            for (std::size_t i = 1; i < grid.size(); ++i) {
                CHECK(grid[i] >= grid[i - 1]);
                CHECK(grid[i] <= 1.0);
            }
        }
    }
    CHECK_THROWS_AS(respace(reflow_respace(), 1.5), std::domain_error);
    CHECK_THROWS_AS(respace_grid(reflow_respace(), 0), std::invalid_argument);
}
