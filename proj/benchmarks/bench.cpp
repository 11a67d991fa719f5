#include <random>

#include <benchmark/benchmark.h>

#include "fpd/hierarchy.hpp"
#include "fpd/io/synth.hpp"
#include "fpd/linalg.hpp"
#include "fpd/metrics.hpp"

using namespace fpd;
using linalg::Matrix;

namespace {

Matrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(n, d, 0.0);
    for (double& v : m.data()) v = g(rng);
    return m;
}

Matrix random_spd(std::size_t d, std::uint64_t seed) {
    return metrics::fit_gaussian(random_rows(4 * d, d, seed)).cov;
}

void BM_SymEig(benchmark::State& state) {
    const Matrix a = random_spd(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(linalg::sym_eig(a));
}
BENCHMARK(BM_SymEig)->Arg(16)->Arg(64)->Arg(256);

void BM_SpdSqrt(benchmark::State& state) {
    const Matrix a = random_spd(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(linalg::spd_sqrt(a));
}
BENCHMARK(BM_SpdSqrt)->Arg(16)->Arg(64)->Arg(256);

void BM_Fpd(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    const auto a = metrics::fit_gaussian(random_rows(4 * d, d, 3));
    const auto b = metrics::fit_gaussian(random_rows(4 * d, d, 4));
    for (auto _ : state) benchmark::DoNotOptimize(metrics::fpd(a, b));
}
BENCHMARK(BM_Fpd)->Arg(64)->Arg(256);

void BM_MmdRbf(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_rows(n, 256, 5), b = random_rows(n, 256, 6);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::mmd(a, b, {metrics::Kernel::Rbf, 1.0}));
}
BENCHMARK(BM_MmdRbf)->Arg(128)->Arg(512);

/// Untrained stack: extraction cost does not depend on the weights.
void BM_ExtractDaily(benchmark::State& state) {
    const ExtractorStack stack = ExtractorStack::create(ArchitectureConfig{}, {Resolution::Hourly, Resolution::Daily}, 1);
    const SeriesBatch x = io::synth_wind(static_cast<std::size_t>(state.range(0)), Resolution::FiveMin, 7);
    for (auto _ : state) benchmark::DoNotOptimize(extract_hierarchical(stack, x, Resolution::Daily));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExtractDaily)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
