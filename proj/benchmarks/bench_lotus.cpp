// Microbenchmarks for the hot paths: dense kernels, decompositions,
// projector construction and a full optimizer step. Sizes are desk scale;
// the goal is relative cost tracking, not peak throughput.
#include <benchmark/benchmark.h>

#include <cstddef>

#include "lotus/decomp.hpp"
#include "lotus/matrix.hpp"
#include "lotus/optimizer.hpp"
#include "lotus/policy.hpp"
#include "lotus/projector.hpp"
#include "lotus/rng.hpp"

namespace {

using namespace lotus;

DenseMatrix decaying(std::size_t m, std::size_t n, double base, RngState& rng) {
    const std::size_t k = std::min(m, n);
    DenseMatrix u = qr_orthonormalize(gaussian_matrix(m, k, rng));
    DenseMatrix v = qr_orthonormalize(gaussian_matrix(n, k, rng));
    double s = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < m; ++i) u(i, j) *= s;
        s *= base;
    }
    return matmul(u, transpose(v));
}

void BM_Matmul(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    RngState rng(1);
    const DenseMatrix a = gaussian_matrix(n, n, rng);
    const DenseMatrix b = gaussian_matrix(n, n, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b));
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_QrOrthonormalize(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t k = static_cast<std::size_t>(state.range(1));
    RngState rng(2);
    const DenseMatrix a = gaussian_matrix(n, k, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(qr_orthonormalize(a));
    }
}
BENCHMARK(BM_QrOrthonormalize)->Args({64, 16})->Args({256, 32})->Args({1024, 32});

void BM_ExactSvd(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    RngState rng(3);
    const DenseMatrix a = decaying(n, n, 0.95, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_svd(a));
    }
}
BENCHMARK(BM_ExactSvd)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_RandomizedRange(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t rank = static_cast<std::size_t>(state.range(1));
    RngState rng(4);
    const DenseMatrix a = decaying(n, n, 0.95, rng);
    for (auto _ : state) {
        RngState sketch(11);
        benchmark::DoNotOptimize(randomized_range(a, rank, 5, 2, sketch));
    }
}
BENCHMARK(BM_RandomizedRange)->Args({256, 16})->Args({512, 32})->Unit(benchmark::kMillisecond);

void BM_ProjectorBuild(benchmark::State& state) {
    RngState rng(5);
    const DenseMatrix g = gaussian_matrix(256, 1024, rng);
    for (auto _ : state) {
        RngState sketch(12);
        benchmark::DoNotOptimize(compute_projector(g, 32, sketch, RangeOptions{}, 1));
    }
    state.SetLabel("256x1024 rank 32");
}
BENCHMARK(BM_ProjectorBuild)->Unit(benchmark::kMillisecond);

void BM_ProjectRoundTrip(benchmark::State& state) {
    RngState rng(6);
    const DenseMatrix g = gaussian_matrix(256, 1024, rng);
    RngState sketch(13);
    const Projector p = compute_projector(g, 32, sketch, RangeOptions{}, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(project_back(p, project(p, g)));
    }
}
BENCHMARK(BM_ProjectRoundTrip);

void BM_StepLayer(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    RngState rng(7);
    LotusHyperparams hp;
    hp.rank = 16;
    hp.switch_config.kind = PolicyKind::FixedInterval;
    hp.switch_config.fixed_interval = 1000000000ull;
    hp.rng = RngState(8);
    const DenseMatrix g0 = gaussian_matrix(n, n, rng);
    LayerOptState st = init_layer(g0, hp, 1);
    DenseMatrix w = gaussian_matrix(n, n, rng);
    uint64_t step = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(step_layer(st, w, g0, hp, step));
        ++step;
    }
}
BENCHMARK(BM_StepLayer)->Arg(128)->Arg(256);

void BM_PathEfficiency(benchmark::State& state) {
    RngState rng(9);
    LotusHyperparams hp;
    hp.rank = 8;
    // The gradient window is only maintained under this policy.
    hp.switch_config.kind = PolicyKind::PathEfficiency;
    hp.switch_config.window_len = 50;
    const DenseMatrix g0 = gaussian_matrix(64, 64, rng);
    LayerOptState st = init_layer(g0, hp, 1);
    for (uint64_t s = 2; s <= 60; ++s) {
        const DenseMatrix g = gaussian_matrix(64, 64, rng);
        st.tracker.record(project(st.projector, g), g);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(path_efficiency(st.tracker, st.projector));
    }
}
BENCHMARK(BM_PathEfficiency);

} // namespace

BENCHMARK_MAIN();
