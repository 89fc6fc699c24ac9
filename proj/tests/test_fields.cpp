#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "sforge/fields.hpp"
#include "sforge/metrics.hpp"
#include "sforge/rng.hpp"
#include "sforge/samplers.hpp"

using namespace sforge;

namespace {

// Monte-Carlo oracle for E[x0 - eps | x_t = x] under rectified flow with
// Gaussian-mixture data: draw x0 from the prior, recover the eps that maps
// it onto x, and importance-weight by the standard-normal density of eps.
std::vector<double> mc_rf_velocity(const std::vector<VelocityField::MixtureComponent>& comps,
                                   const std::vector<double>& x, double t, int samples,
                                   std::uint64_t seed) {
    CounterRng rng(seed, 0);
    const std::size_t dim = x.size();
    std::vector<double> num(dim, 0.0);
    double den = 0.0;
    std::vector<double> cum;
    double acc = 0.0;
    for (const auto& c : comps) cum.push_back(acc += c.weight);
    for (int s = 0; s < samples; ++s) {
        double u = rng.uniform() * acc;
        std::size_t k = 0;
        while (k + 1 < cum.size() && u > cum[k]) ++k;
        std::vector<double> x0(dim), eps(dim);
        double logw = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            x0[d] = comps[k].mu[d] + comps[k].scale * rng.normal();
            eps[d] = (x[d] - t * x0[d]) / (1.0 - t);
            logw -= 0.5 * eps[d] * eps[d];
        }
        double w = std::exp(logw);
        for (std::size_t d = 0; d < dim; ++d) num[d] += w * (x0[d] - eps[d]);
        den += w;
    }
    for (double& v : num) v /= den;
    return num;
}

} // namespace

TEST_CASE("gaussian rf velocity closed-form spot values") {
    // mu=0, s=1, t=0.5: t s^2 - (1-t) = 0, so v = 0 for any x
    auto v = rf_gaussian_velocity({0.0}, 1.0, {1.7}, 0.5);
    CHECK(v[0] == doctest::Approx(0.0).epsilon(1e-15));
    // mu=0, s=1, t=0.75, x=1 -> (0.75-0.25)/(0.5625+0.0625) = 0.8
    v = rf_gaussian_velocity({0.0}, 1.0, {1.0}, 0.75);
    CHECK(v[0] == doctest::Approx(0.8).epsilon(1e-12));
    // delta data: s=0, mu=2, t=0, x=0 -> v = 2
    v = rf_gaussian_velocity({2.0}, 0.0, {0.0}, 0.0);
    CHECK(v[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)rf_gaussian_velocity({2.0}, 0.0, {0.0}, 1.0), std::domain_error);
}

TEST_CASE("gaussian rf velocity matches the Monte-Carlo regression") {
    std::vector<VelocityField::MixtureComponent> single{{1.0, {0.8, -0.4}, 0.6}};
    const std::vector<std::pair<std::vector<double>, double>> probes{
        {{0.3, -0.1}, 0.4}, {{0.0, 0.0}, 0.25}, {{0.9, -0.5}, 0.6},
        {{-0.4, 0.2}, 0.5}, {{0.5, 0.5}, 0.35}};
    int probe_idx = 0;
    for (const auto& [x, t] : probes) {
        auto mc = mc_rf_velocity(single, x, t, 1000000, 100 + probe_idx++);
        auto cf = rf_gaussian_velocity({0.8, -0.4}, 0.6, x, t);
        for (std::size_t d = 0; d < 2; ++d) CHECK(cf[d] == doctest::Approx(mc[d]).epsilon(1e-2));
    }
}

TEST_CASE("mixture of one equals the gaussian field") {
    std::vector<VelocityField::MixtureComponent> single{{1.0, {0.8, -0.4}, 0.6}};
    auto a = rf_gmm2d_velocity(single, {0.3, -0.1}, 0.4);
    auto b = rf_gaussian_velocity({0.8, -0.4}, 0.6, {0.3, -0.1}, 0.4);
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-14));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-14));
}

TEST_CASE("symmetric two-component mixture has zero velocity at the origin") {
    std::vector<VelocityField::MixtureComponent> comps{{0.5, {1.3, 0.0}, 0.4},
                                                       {0.5, {-1.3, 0.0}, 0.4}};
    auto v = rf_gmm2d_velocity(comps, {0.0, 0.0}, 0.45);
    CHECK(std::abs(v[0]) < 1e-14);
}

TEST_CASE("three-component mixture matches the Monte-Carlo oracle") {
    auto p = builtin_problem("gmm2d");
    auto mc = mc_rf_velocity(p.field.mixture, {0.3, -0.1}, 0.4, 1000000, 7);
    auto cf = rf_gmm2d_velocity(p.field.mixture, {0.3, -0.1}, 0.4);
    CHECK(cf[0] == doctest::Approx(mc[0]).epsilon(1e-2));
    CHECK(cf[1] == doctest::Approx(mc[1]).epsilon(1e-2));
}

TEST_CASE("gmm posterior weights survive extreme log-domain underflow") {
    auto p = builtin_problem("gmm2d");
    auto v = rf_gmm2d_velocity(p.field.mixture, {200.0, -200.0}, 0.9);
    CHECK(std::isfinite(v[0]));
    CHECK(std::isfinite(v[1]));
}

TEST_CASE("vp gaussian xbar limits") {
    auto ns = NoiseSchedule::dit();
    // s=0: xbar = mu regardless of x and t
    auto v = vp_gaussian_xbar({0.9, -0.6}, 0.0, ns, {3.0, 3.0}, 0.5);
    CHECK(v[0] == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(-0.6).epsilon(1e-14));
    // t=0 (alpha=1, sigma=0): xbar = x
    v = vp_gaussian_xbar({0.9, -0.6}, 0.7, ns, {0.3, 0.1}, 0.0);
    CHECK(v[0] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(0.1).epsilon(1e-14));
    // s=1, mu=0: xbar = alpha x because alpha^2 + sigma^2 = 1
    auto [a, s] = vp_alpha_sigma(ns, 0.5);
    v = vp_gaussian_xbar({0.0}, 1.0, ns, {1.0}, 0.5);
    CHECK(v[0] == doctest::Approx(a).epsilon(1e-13));
    (void)s;
}

TEST_CASE("perturbed field respects the L1 budget everywhere") {
    auto p = builtin_problem("gmm2d");
    const double eta = 0.05;
    auto pert = VelocityField::perturbed(p.field, eta, 123);
    CounterRng rng(55, 0);
    double max_l1 = 0.0;
    for (int probe = 0; probe < 10000; ++probe) {
        std::vector<double> x{3.0 * rng.normal(), 3.0 * rng.normal()};
        double t = 0.999 * rng.uniform();
        auto vb = eval_velocity(p.field, x, t);
        auto vp = eval_velocity(pert, x, t);
        max_l1 = std::max(max_l1, l1_distance(vb, vp));
    }
    CHECK(max_l1 <= eta);
    CHECK(max_l1 > 0.0);
}

TEST_CASE("oracle endpoint on closed-form fields") {
    auto cp = builtin_problem("const2d");
    auto e = oracle_endpoint(cp, {0.1, 0.2}, 1000);
    CHECK(e[0] == doctest::Approx(0.1 + 0.7).epsilon(1e-13));
    CHECK(e[1] == doctest::Approx(0.2 - 0.3).epsilon(1e-13));

    auto lp = builtin_problem("linear");  // v = x
    e = oracle_endpoint(lp, {1.0}, 100000);
    CHECK(e[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-4));
}

TEST_CASE("oracle halving errors decrease monotonically") {
    for (const char* name : {"gauss", "gmm2d", "vpgauss"}) {
        auto p = builtin_problem(name);
        std::vector<double> x0{0.4, -0.9};
        double prev = 1e300;
        for (int steps : {500, 1000, 2000, 4000, 8000}) {
            auto a = oracle_endpoint(p, x0, steps);
            auto b = oracle_endpoint(p, x0, 2 * steps);
            double gap = l2_distance(a, b);
            CHECK(gap < prev);
            prev = gap;
        }
    }
}

TEST_CASE("problem files round out the builtin set") {
    CHECK_THROWS_AS(builtin_problem("nope"), std::invalid_argument);
    auto p = resolve_problem("vpgauss");
    CHECK(p.kind == SchedulerKind::VPLinear);
    CHECK(p.noise.beta_max == 20.0);
}

TEST_CASE("problem file parsing") {
    const std::string path = "/tmp/sforge_test_problem.txt";
    {
        std::ofstream out(path);
        out << "# a two-component mixture\n";
        out << "name: twins\n";
        out << "kind: rf\n";
        out << "field: gmm2d\n";
        out << "component: [0.5, 1.3, 0.0, 0.4]\n";
        out << "component: [0.5, -1.3, 0.0, 0.4]\n";
    }
    auto p = load_problem(path);
    CHECK(p.name == "twins");
    CHECK(p.field.mixture.size() == 2);
    auto v = eval_velocity(p.field, std::vector<double>{0.0, 0.0}, 0.45);
    CHECK(std::abs(v[0]) < 1e-14);
}

TEST_CASE("field constructors validate their inputs") {
    CHECK_THROWS_AS(VelocityField::gmm2d({{0.5, {0, 0}, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(VelocityField::gmm2d({{-1.0, {0, 0}, 1.0}, {2.0, {0, 0}, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(VelocityField::constant_field({}), std::invalid_argument);
    CHECK_THROWS_AS(VelocityField::gaussian({}, 1.0), std::invalid_argument);
}
