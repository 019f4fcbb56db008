#include <benchmark/benchmark.h>

#include "capexrl/env.hpp"

using namespace capexrl;

namespace {

EnvParams demand_params() {
    EnvParams p;
    p.variant = Variant::price_demand;
    p.horizon = 5;
    p.max_capacity = 4;
    p.demand_drift = 0.2;
    p.demand_vol = 0.1;
    return p;
}

}  // namespace

static void BM_EpisodeRollout(benchmark::State& state) {
    CapacityEnv env(demand_params(), 1);
    for (auto _ : state) {
        EnvState s = env.reset();
        bool terminal = false;
        double total = 0.0;
        while (!terminal) {
            const StepOutcome out = env.step(s, Decision{s.t == 1 ? 1 : 0});
            total += out.reward;
            terminal = out.terminal;
            s = out.next_state;
        }
        benchmark::DoNotOptimize(total);
    }
}
BENCHMARK(BM_EpisodeRollout);

static void BM_StepPoolMode(benchmark::State& state) {
    EnvParams p = demand_params();
    p.sample_pool = 10000;
    CapacityEnv env(p, 1);
    EnvState s = env.reset();
    for (auto _ : state) {
        const StepOutcome out = env.step(s, Decision{0});
        benchmark::DoNotOptimize(out.reward);
        s = out.terminal ? env.reset() : out.next_state;
    }
}
BENCHMARK(BM_StepPoolMode);
