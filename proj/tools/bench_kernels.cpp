// Serial reference vs OpenMP kernel comparison. The two paths execute the
// same per-element arithmetic; this target measures what the threading buys.

#include <benchmark/benchmark.h>

#include <vector>

#include "vton/kernels.hpp"
#include "vton/rng.hpp"

namespace {

std::vector<float> random_vec(size_t n, uint64_t seed) {
    vton::Rng rng(seed);
    std::vector<float> v(n);
    for (float& x : v) x = rng.normal();
    return v;
}

void bench_gemm(benchmark::State& state, bool parallel) {
    const int m = static_cast<int>(state.range(0));
    const int k = static_cast<int>(state.range(1));
    const int n = static_cast<int>(state.range(2));
    auto a = random_vec(static_cast<size_t>(m) * k, 1);
    auto b = random_vec(static_cast<size_t>(k) * n, 2);
    std::vector<float> c(static_cast<size_t>(m) * n);
    vton::kernels::set_parallel(parallel);
    for (auto _ : state) {
        vton::kernels::gemm_nn(m, n, k, a.data(), b.data(), c.data(), false);
        benchmark::DoNotOptimize(c.data());
        benchmark::ClobberMemory();
    }
    vton::kernels::set_parallel(true);
    state.SetItemsProcessed(state.iterations() * 2 * static_cast<int64_t>(m) * n * k);
}

void bench_softmax(benchmark::State& state, bool parallel) {
    const int rows = static_cast<int>(state.range(0));
    const int cols = static_cast<int>(state.range(1));
    auto x = random_vec(static_cast<size_t>(rows) * cols, 3);
    std::vector<float> y(x.size());
    vton::kernels::set_parallel(parallel);
    for (auto _ : state) {
        vton::kernels::softmax_rows(rows, cols, x.data(), 0.125f, y.data());
        benchmark::DoNotOptimize(y.data());
        benchmark::ClobberMemory();
    }
    vton::kernels::set_parallel(true);
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows) * cols);
}

void bench_gelu(benchmark::State& state, bool parallel) {
    const int64_t n = state.range(0);
    auto x = random_vec(static_cast<size_t>(n), 4);
    std::vector<float> y(x.size());
    vton::kernels::set_parallel(parallel);
    for (auto _ : state) {
        vton::kernels::gelu(n, x.data(), y.data());
        benchmark::DoNotOptimize(y.data());
        benchmark::ClobberMemory();
    }
    vton::kernels::set_parallel(true);
    state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK_CAPTURE(bench_gemm, serial, false)->Args({96, 128, 128})->Args({384, 128, 512})->Args({512, 512, 512});
BENCHMARK_CAPTURE(bench_gemm, openmp, true)->Args({96, 128, 128})->Args({384, 128, 512})->Args({512, 512, 512});
BENCHMARK_CAPTURE(bench_softmax, serial, false)->Args({384, 384})->Args({512, 512});
BENCHMARK_CAPTURE(bench_softmax, openmp, true)->Args({384, 384})->Args({512, 512});
BENCHMARK_CAPTURE(bench_gelu, serial, false)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK_CAPTURE(bench_gelu, openmp, true)->Arg(1 << 16)->Arg(1 << 20);

BENCHMARK_MAIN();
