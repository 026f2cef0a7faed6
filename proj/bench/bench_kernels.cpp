// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

#include "dvfs/kernels.hpp"
#include "dvfs/predictors.hpp"

using namespace dvfs;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = g(rng);
    return m;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

kernels::Exec exec_of(const benchmark::State& state) {
    return state.range(1) == 0 ? kernels::Exec::Serial : kernels::Exec::Parallel;
}

void BM_BestSplit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix X = random_matrix(n, 16, 1);
    const auto residual = random_vector(n, 2);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    const auto exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::best_split(exec, X, residual, rows, 2));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_AssignNearest(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix points = random_matrix(n, 14, 3);
    const Matrix centroids = random_matrix(16, 14, 4);
    std::vector<std::size_t> assignment(n);
    const auto exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::assign_nearest(exec, points, centroids, assignment));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_PredictBatch(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    static const FittedModel model = [] {
        const Matrix X = random_matrix(2000, 16, 5);
        const auto y = random_vector(2000, 6);
        return fit(GbrtParams{200, 4, 0.1, 2}, X, y, 0);
    }();
    const Matrix X = random_matrix(n, 16, 7);
    const auto exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(predict_batch(model, X, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

// Second argument: 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_BestSplit)->ArgsProduct({{1000, 20000}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AssignNearest)->ArgsProduct({{10000, 200000}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PredictBatch)->ArgsProduct({{1000, 50000}, {0, 1}})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
