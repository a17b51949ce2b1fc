#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "cascade/cascade_engine.hpp"
#include "cascade/hardness.hpp"
#include "cascade/pair_optimizer.hpp"
#include "generators.hpp"

using namespace cascade;

namespace {

const AlignedRecordSet& rows(std::size_t n, std::size_t models) {
    static std::map<std::pair<std::size_t, std::size_t>, AlignedRecordSet> cache;
    auto it = cache.find({n, models});
    if (it == cache.end()) {
        std::mt19937_64 rng(n * 31 + models);
        it = cache.emplace(std::make_pair(n, models), align(cascade::testing::random_record_sets(rng, n, models))).first;
    }
    return it->second;
}

void BM_Evaluate(benchmark::State& state) {
    const auto& a = rows(static_cast<std::size_t>(state.range(0)), 2);
    const CascadeConfig cfg{a.models(), {0.24}};
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(a, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(50'000);

void BM_Sweep(benchmark::State& state) {
    const auto& a = rows(50'000, 2);
    const auto grid = default_grid(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sweep(a, a.models(), grid, 1));
}
BENCHMARK(BM_Sweep)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_SweepKPass(benchmark::State& state) {
    const auto& a = rows(50'000, 3);
    const auto grid = default_grid(50);
    for (auto _ : state) benchmark::DoNotOptimize(sweep_kpass(a, a.models(), grid, grid, 1));
}
BENCHMARK(BM_SweepKPass)->Unit(benchmark::kMillisecond);

void BM_Decompose(benchmark::State& state) {
    const auto& a = rows(50'000, 2);
    for (auto _ : state) benchmark::DoNotOptimize(decompose_mistakes(a));
}
BENCHMARK(BM_Decompose);

void BM_ParetoFront(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<CascadePoint> pts(static_cast<std::size_t>(state.range(0)));
    for (auto& p : pts) {
        p.accuracy = u(rng);
        p.expected_macs = u(rng) * 40.0;
    }
    for (auto _ : state) benchmark::DoNotOptimize(pareto_front_indices(pts));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ParetoFront)->Range(256, 1 << 16)->Complexity(benchmark::oNLogN);

}  // namespace

BENCHMARK_MAIN();
