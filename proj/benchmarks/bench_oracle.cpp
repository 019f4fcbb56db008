#include <benchmark/benchmark.h>

#include "capexrl/oracle.hpp"

using namespace capexrl;

namespace {

EnvParams price_only_t3() {
    EnvParams p;
    p.variant = Variant::price_only;
    p.horizon = 3;
    return p;
}

EnvParams demand_t5_k4() {
    EnvParams p;
    p.variant = Variant::price_demand;
    p.horizon = 5;
    p.max_capacity = 4;
    p.demand_drift = 0.2;
    p.demand_vol = 0.1;
    return p;
}

}  // namespace

static void BM_BuildLattice(benchmark::State& state) {
    const EnvParams p = demand_t5_k4();
    const int nodes = static_cast<int>(state.range(0));
    for (auto _ : state) {
        const LatticeSpec lattice = build_lattice(p, nodes, nodes / 2);
        benchmark::DoNotOptimize(lattice.price_trans.back().data());
    }
}
BENCHMARK(BM_BuildLattice)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_BackwardInduction(benchmark::State& state) {
    const EnvParams p = demand_t5_k4();
    const int nodes = static_cast<int>(state.range(0));
    const LatticeSpec lattice = build_lattice(p, nodes, nodes / 2);
    for (auto _ : state) {
        const DPSolution dp = backward_induction(lattice, p);
        benchmark::DoNotOptimize(dp.root_value());
    }
}
BENCHMARK(BM_BackwardInduction)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_EvaluatePolicy(benchmark::State& state) {
    const EnvParams p = price_only_t3();
    const DPSolution dp = backward_induction(build_lattice(p, 200), p);
    const PolicyFn policy = dp.policy();
    for (auto _ : state) {
        const EvalReport report = evaluate_policy(policy, p, 10000, 42, nullptr, 1);
        benchmark::DoNotOptimize(report.mean);
    }
}
BENCHMARK(BM_EvaluatePolicy)->Unit(benchmark::kMillisecond);

static void BM_Stage2Margin(benchmark::State& state) {
    const EnvParams p = price_only_t3();
    Rng rng(7);
    std::vector<double> z(100000);
    for (double& v : z) v = rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(stage2_margin_mc(p, 0.106, z));
    }
}
BENCHMARK(BM_Stage2Margin);
