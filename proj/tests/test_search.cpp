#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "sforge/fields.hpp"
#include "sforge/search.hpp"

using namespace sforge;

namespace {

std::vector<std::vector<double>> zero_coeffs(int n) {
    std::vector<std::vector<double>> c(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
    for (int i = 1; i < n; ++i) c[static_cast<std::size_t>(i) - 1].assign(static_cast<std::size_t>(i), 0.0);
    return c;
}

} // namespace

TEST_CASE("lion step follows the sign of the interpolated momentum") {
    std::vector<double> p{1.0, 1.0, 1.0, 1.0};
    std::vector<double> m{1.0, -1.0, 0.0, 2.0};
    std::vector<double> g{-1.0, -1.0, 0.0, -100.0};
    // update direction: sign(0.9 m + 0.1 g) = sign({0.8, -1.0, 0.0, 1.7 - 10})
    lion_step(p, g, m, 0.1, 0.9, 0.99);
    CHECK(p[0] == doctest::Approx(0.9));
    CHECK(p[1] == doctest::Approx(1.1));
    CHECK(p[2] == doctest::Approx(1.0));  // sign(0) = 0, no movement
    CHECK(p[3] == doctest::Approx(1.1));
    // momentum: 0.99 m + 0.01 g
    CHECK(m[0] == doctest::Approx(0.99 - 0.01));
    CHECK(m[3] == doctest::Approx(1.98 - 1.0));
}

TEST_CASE("alignment loss of a trajectory against itself is zero") {
    auto p = builtin_problem("gmm2d");
    SearchConfig cfg;
    auto ref = reference_trajectory(p, {0.4, -0.7}, 20);
    CHECK(alignment_loss(ref, ref, cfg) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("alignment loss at euler init matches an independent computation") {
    auto p = builtin_problem("gauss");
    SearchConfig cfg;
    cfg.nfe = 4;
    cfg.ref_steps = 16;
    std::vector<double> x0{0.6, -0.2};
    auto ref = reference_trajectory(p, x0, cfg.ref_steps);
    auto coarse = euler_sample(p.field, x0, uniform_grid(cfg.nfe));
    double expect = alignment_loss(coarse, ref, cfg);

    // the search loss at the euler initialization over a batch of one
    double got = search_loss(p, {x0}, cfg, std::vector<double>(4, 1.0), zero_coeffs(4));
    CHECK(got == doctest::Approx(expect).epsilon(1e-13));
    CHECK(got > 0.0);
}

TEST_CASE("tape gradient matches central finite differences") {
    SearchConfig cfg;
    cfg.ref_steps = 25;
    const double h = 1e-5;
    for (const char* name : {"gmm2d", "gauss", "vpgauss"}) {
        auto p = builtin_problem(name);
        for (int n : {5, 8}) {
            cfg.nfe = n;
            auto x0 = draw_batch(42, 0, 3, 2);
            std::vector<double> raw_r(static_cast<std::size_t>(n), 1.0);
            auto raw_c = zero_coeffs(n);
            // move off the symmetric init so no gradient is trivially zero
            for (std::size_t i = 0; i < raw_r.size(); ++i) raw_r[i] += 0.05 * static_cast<double>(i);
            for (std::size_t i = 0; i < raw_c.size(); ++i)
                for (std::size_t j = 0; j < raw_c[i].size(); ++j)
                    raw_c[i][j] = 0.03 * static_cast<double>(i + 1) - 0.02 * static_cast<double>(j);

            auto g = grad_schedule(p, x0, cfg, raw_r, raw_c);
            REQUIRE(g.finite);

            auto check_one = [&](double got, double* slot) {
                double keep = *slot;
                *slot = keep + h;
                double up = search_loss(p, x0, cfg, raw_r, raw_c);
                *slot = keep - h;
                double dn = search_loss(p, x0, cfg, raw_r, raw_c);
                *slot = keep;
                double fd = (up - dn) / (2.0 * h);
                CHECK(std::abs(got - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
            };
            for (std::size_t i = 0; i < raw_r.size(); ++i) check_one(g.d_raw_r[i], &raw_r[i]);
            for (std::size_t i = 0; i < raw_c.size(); ++i)
                for (std::size_t j = 0; j < raw_c[i].size(); ++j)
                    check_one(g.d_raw_c[i][j], &raw_c[i][j]);
        }
    }
}

TEST_CASE("raw_r gradient is shift-invariant through the softmax") {
    auto p = builtin_problem("gmm2d");
    SearchConfig cfg;
    cfg.nfe = 5;
    cfg.ref_steps = 20;
    auto x0 = draw_batch(9, 0, 4, 2);
    std::vector<double> raw_r{0.8, 1.1, 0.9, 1.3, 1.0};
    auto raw_c = zero_coeffs(5);
    auto g = grad_schedule(p, x0, cfg, raw_r, raw_c);
    double total = 0.0;
    for (double d : g.d_raw_r) total += d;
    CHECK(std::abs(total) < 1e-10);
}

TEST_CASE("draw_batch is deterministic and stream-separated") {
    auto a = draw_batch(7, 3, 4, 2);
    auto b = draw_batch(7, 3, 4, 2);
    auto c = draw_batch(7, 4, 4, 2);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.size() == 4);
    CHECK(a[0].size() == 2);
}

TEST_CASE("search with zero iterations returns the euler solver") {
    auto p = builtin_problem("gmm2d");
    SearchConfig cfg;
    cfg.nfe = 5;
    cfg.ref_steps = 20;
    cfg.batch = 4;
    cfg.iterations = 0;
    auto r = run_search(p, cfg);
    CHECK_FALSE(r.diverged);
    CHECK(r.best_loss == r.initial_loss);
    for (double d : r.schedule.deltas) CHECK(d == doctest::Approx(0.2).epsilon(1e-15));
    for (const auto& row : r.schedule.coeff_rows)
        for (double c : row) CHECK(c == 0.0);
}

TEST_CASE("a short search improves on the euler initialization") {
    auto p = builtin_problem("gmm2d");
    SearchConfig cfg;
    cfg.nfe = 5;
    cfg.ref_steps = 40;
    cfg.batch = 8;
    cfg.iterations = 40;
    cfg.lr = 0.02;
    cfg.seed = 3;
    auto r = run_search(p, cfg);
    CHECK_FALSE(r.diverged);
    CHECK(r.best_loss < r.initial_loss);
    // the coefficients have moved off zero, so gradients flowed at init
    double max_c = 0.0;
    for (const auto& row : r.schedule.coeff_rows)
        for (double c : row) max_c = std::max(max_c, std::abs(c));
    CHECK(max_c > 0.0);
    CHECK(r.history.size() == 40);
    CHECK(r.schedule.provenance.source == "searched");
    CHECK(r.schedule.provenance.config_hash == cfg.hash());
}

TEST_CASE("search is deterministic for a fixed seed") {
    auto p = builtin_problem("gauss");
    SearchConfig cfg;
    cfg.nfe = 4;
    cfg.ref_steps = 20;
    cfg.batch = 4;
    cfg.iterations = 15;
    cfg.seed = 11;
    auto a = run_search(p, cfg);
    auto b = run_search(p, cfg);
    CHECK(a.best_loss == b.best_loss);
    REQUIRE(a.schedule.deltas.size() == b.schedule.deltas.size());
    for (std::size_t i = 0; i < a.schedule.deltas.size(); ++i)
        CHECK(std::memcmp(&a.schedule.deltas[i], &b.schedule.deltas[i], sizeof(double)) == 0);
    CHECK(a.schedule.coeff_rows == b.schedule.coeff_rows);
}

TEST_CASE("per-row caps survive the search") {
    auto p = builtin_problem("gmm2d");
    SearchConfig cfg;
    cfg.nfe = 6;
    cfg.ref_steps = 20;
    cfg.batch = 4;
    cfg.iterations = 10;
    cfg.max_order = std::vector<int>(6, 2);  // every row sees at most 2 past evals
    auto r = run_search(p, cfg);
    for (int i = 1; i < 6; ++i)
        for (int j = 0; j < i; ++j)
            if (i - j > 2) CHECK(r.schedule.m(i, j) == 0.0);
    CHECK(r.schedule.max_order == cfg.max_order);
}

TEST_CASE("config validation and hashing") {
    SearchConfig cfg;
    CHECK(cfg.hash().size() == 16);
    CHECK(cfg.hash() == cfg.hash());
    SearchConfig other = cfg;
    other.lr = 0.02;
    CHECK(other.hash() != cfg.hash());
    other = cfg;
    other.nfe = 0;
    CHECK_THROWS_AS(other.validate(), std::invalid_argument);
    other = cfg;
    other.ref_steps = 5;  // must be >= nfe
    CHECK_THROWS_AS(other.validate(), std::invalid_argument);
}
