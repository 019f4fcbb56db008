#include <benchmark/benchmark.h>

#include <vector>

#include "capexrl/net.hpp"
#include "capexrl/rng.hpp"

using namespace capexrl;

static void BM_Forward(benchmark::State& state) {
    Rng rng(1);
    const int hidden = static_cast<int>(state.range(0));
    const QNetwork net = QNetwork::random_init({4, hidden, hidden, 2}, Activation::relu, rng);
    NetWorkspace ws(net);
    const std::vector<double> input = {0.5, 1.1, 1.0, 0.0};
    for (auto _ : state) {
        net.forward(input, ws);
        benchmark::DoNotOptimize(ws.output().data());
    }
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64)->Arg(128);

static void BM_Backward(benchmark::State& state) {
    Rng rng(1);
    const int hidden = static_cast<int>(state.range(0));
    const QNetwork net = QNetwork::random_init({4, hidden, hidden, 2}, Activation::relu, rng);
    NetWorkspace ws(net);
    const std::vector<double> input = {0.5, 1.1, 1.0, 0.0};
    net.forward(input, ws);
    std::vector<double> grad(net.param_count(), 0.0);
    for (auto _ : state) {
        net.backward(ws, 1, 3.0, grad);
        benchmark::DoNotOptimize(grad.data());
    }
}
BENCHMARK(BM_Backward)->Arg(32)->Arg(64)->Arg(128);

static void BM_AdamStep(benchmark::State& state) {
    Rng rng(1);
    QNetwork net = QNetwork::random_init({4, 64, 64, 2}, Activation::relu, rng);
    AdamOptimizer adam(1e-3);
    std::vector<double> grad(net.param_count(), 1e-3);
    for (auto _ : state) {
        adam.step(net.params(), grad);
    }
    benchmark::DoNotOptimize(net.params().data());
}
BENCHMARK(BM_AdamStep);
