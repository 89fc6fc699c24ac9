#include <benchmark/benchmark.h>

#include <vector>

#include "sforge/fields.hpp"
#include "sforge/samplers.hpp"
#include "sforge/search.hpp"
#include "sforge/solver_schedule.hpp"

using namespace sforge;

namespace {

std::vector<std::vector<double>> zero_coeffs(int n) {
    std::vector<std::vector<double>> c(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
    for (int i = 1; i < n; ++i) c[static_cast<std::size_t>(i) - 1].assign(static_cast<std::size_t>(i), 0.0);
    return c;
}

void BM_GmmFieldEval(benchmark::State& state) {
    auto p = builtin_problem("gmm2d");
    std::vector<double> x{0.3, -0.4};
    for (auto _ : state) {
        auto v = eval_velocity(p.field, x, 0.4);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_GmmFieldEval);

void BM_EulerSample(benchmark::State& state) {
    auto p = builtin_problem("gmm2d");
    auto grid = uniform_grid(static_cast<int>(state.range(0)));
    std::vector<double> x0{0.3, -0.4};
    for (auto _ : state) {
        auto tr = euler_sample(p.field, x0, grid);
        benchmark::DoNotOptimize(tr);
    }
}
BENCHMARK(BM_EulerSample)->Arg(5)->Arg(10)->Arg(100);

void BM_MultistepRfSample(benchmark::State& state) {
    auto p = builtin_problem("gmm2d");
    const int n = static_cast<int>(state.range(0));
    std::vector<double> raw_r(static_cast<std::size_t>(n), 1.0);
    auto raw_c = zero_coeffs(n);
    for (auto& row : raw_c)
        for (double& v : row) v = 0.1;
    auto s = build_schedule(raw_r, raw_c, SchedulerKind::RectifiedFlow);
    std::vector<double> x0{0.3, -0.4};
    for (auto _ : state) {
        auto tr = multistep_rf_sample(p.field, x0, s);
        benchmark::DoNotOptimize(tr);
    }
}
BENCHMARK(BM_MultistepRfSample)->Arg(5)->Arg(10);

void BM_DpmPp2mSample(benchmark::State& state) {
    auto p = builtin_problem("vpgauss");
    auto grid = uniform_grid(static_cast<int>(state.range(0)));
    std::vector<double> x0{0.3, -0.4};
    for (auto _ : state) {
        auto tr = dpm_solver_pp_2m_sample(p.field, x0, grid, p.noise, p.vp_t_min);
        benchmark::DoNotOptimize(tr);
    }
}
BENCHMARK(BM_DpmPp2mSample)->Arg(5)->Arg(10);

void BM_GradSchedule(benchmark::State& state) {
    auto p = builtin_problem("gmm2d");
    const int n = static_cast<int>(state.range(0));
    SearchConfig cfg;
    cfg.nfe = n;
    cfg.ref_steps = 50;
    auto x0 = draw_batch(1, 0, 8, 2);
    std::vector<double> raw_r(static_cast<std::size_t>(n), 1.0);
    auto raw_c = zero_coeffs(n);
    for (auto _ : state) {
        auto g = grad_schedule(p, x0, cfg, raw_r, raw_c);
        benchmark::DoNotOptimize(g);
    }
}
BENCHMARK(BM_GradSchedule)->Arg(5)->Arg(10);

void BM_BuildSchedule(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::vector<double> raw_r(static_cast<std::size_t>(n), 1.0);
    auto raw_c = zero_coeffs(n);
    for (auto _ : state) {
        auto s = build_schedule(raw_r, raw_c, SchedulerKind::RectifiedFlow);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_BuildSchedule)->Arg(10);

} // namespace

BENCHMARK_MAIN();
