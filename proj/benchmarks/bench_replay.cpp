#include <benchmark/benchmark.h>

#include "capexrl/replay.hpp"

using namespace capexrl;

static void BM_Push(benchmark::State& state) {
    ReplayBuffer buf(100000);
    Experience e;
    e.reward = 1.0;
    for (auto _ : state) {
        buf.push(e);
    }
    benchmark::DoNotOptimize(buf.size());
}
BENCHMARK(BM_Push);

static void BM_SampleIndices(benchmark::State& state) {
    ReplayBuffer buf(100000);
    Experience e;
    for (int i = 0; i < 100000; ++i) buf.push(e);
    Rng rng(3);
    std::vector<std::size_t> idx;
    for (auto _ : state) {
        buf.sample_indices(64, rng, idx);
        benchmark::DoNotOptimize(idx.data());
    }
}
BENCHMARK(BM_SampleIndices);

BENCHMARK_MAIN();
