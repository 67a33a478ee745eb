#include <benchmark/benchmark.h>

#include "relaxsort/grad.hpp"
#include "relaxsort/ops.hpp"
#include "relaxsort/stochastic.hpp"

using namespace relaxsort;

namespace {

Vector scores(int n) {
    detail::PortableRng rng(7);
    return detail::sample_min_gap_scores(rng, n, 0.01);
}

void bm_soft_sort(benchmark::State& state) {
    const Vector s = scores(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(soft_sort(s, Temperature(1.0)));
}

void bm_neural_sort(benchmark::State& state) {
    const Vector s = scores(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(neural_sort(s, Temperature(1.0)));
}

void bm_soft_sort_vjp(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Vector s = scores(n);
    const Matrix upstream = Matrix::Ones(n, n);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            soft_sort_vjp(s, Temperature(1.0), SemiMetric::l1(), upstream));
}

void bm_neural_sort_vjp(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Vector s = scores(n);
    const Matrix upstream = Matrix::Ones(n, n);
    for (auto _ : state)
        benchmark::DoNotOptimize(neural_sort_vjp(s, Temperature(1.0), upstream));
}

}  // namespace

BENCHMARK(bm_soft_sort)->Arg(100)->Arg(500)->Arg(2000);
BENCHMARK(bm_neural_sort)->Arg(100)->Arg(500)->Arg(2000);
BENCHMARK(bm_soft_sort_vjp)->Arg(100)->Arg(500);
BENCHMARK(bm_neural_sort_vjp)->Arg(100)->Arg(500);

BENCHMARK_MAIN();
