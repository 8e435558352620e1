// Serial reference vs OpenMP engine on the same workloads.

#include "covsamp/engine.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <map>

using namespace covsamp;

namespace {

const Population& population22() {
    static const Population pop(random_covariance(22, 2024));
    return pop;
}

const Population& population_ma(Index k) {
    static std::map<Index, Population> cache;
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, assemble_population(DgpSpec{}, k)).first;
    return it->second;
}

void BM_ExactSerial(benchmark::State& state) {
    const auto d1 = static_cast<Index>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(serial::exact_distribution(population22(), d1));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(binomial(22, static_cast<std::uint64_t>(d1))));
}

void BM_ExactParallel(benchmark::State& state) {
    const auto d1 = static_cast<Index>(state.range(0));
    EngineOptions opts;
    opts.workers = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(exact_distribution(population22(), d1, opts));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(binomial(22, static_cast<std::uint64_t>(d1))));
}

void BM_MonteCarloSerial(benchmark::State& state) {
    const auto k = static_cast<Index>(state.range(0));
    const auto& pop = population_ma(k);
    for (auto _ : state) benchmark::DoNotOptimize(serial::monte_carlo_distribution(pop, k / 2, 200, 1));
    state.SetItemsProcessed(state.iterations() * 200);
}

void BM_MonteCarloParallel(benchmark::State& state) {
    const auto k = static_cast<Index>(state.range(0));
    const auto& pop = population_ma(k);
    EngineOptions opts;
    opts.workers = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_distribution(pop, k / 2, 200, 1, opts));
    state.SetItemsProcessed(state.iterations() * 200);
}

void thread_args(benchmark::internal::Benchmark* b, std::int64_t first) {
    for (int t = 1; t <= omp_get_num_procs(); t *= 2) b->Args({first, t});
}

}  // namespace

BENCHMARK(BM_ExactSerial)->Arg(11)->Arg(19)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExactParallel)->Apply([](auto* b) { thread_args(b, 11); thread_args(b, 19); })->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloSerial)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloParallel)->Apply([](auto* b) { thread_args(b, 400); })->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
