// Forward and forward+backward cost of single layers on window-sized graphs.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sagechain/adam.hpp"
#include "sagechain/geometric.hpp"
#include "sagechain/graph.hpp"
#include "sagechain/graph_context.hpp"
#include "sagechain/ops.hpp"
#include "sagechain/sequence.hpp"

using namespace sagechain;

namespace {

Tensor random_input(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool grad = false) {
    std::vector<double> v(rows * cols);
    for (double& x : v) x = uniform_real(rng, -1.0, 1.0);
    return Tensor::from({rows, cols}, std::move(v), grad);
}

GraphContext window_graph(const Tensor& x) {
    const std::vector<int> labels(x.shape()[0], 0);
    return GraphContext::from_graph(build_graph(x.data(), x.shape()[0], x.shape()[1], labels, {0.5, 0.1}));
}

void BM_SageForward(benchmark::State& state) {
    const auto agg = static_cast<Aggregator>(state.range(0));
    const auto nodes = static_cast<std::size_t>(state.range(1));
    std::mt19937_64 rng(1);
    const auto x = random_input(nodes, 16, rng);
    const auto ctx = window_graph(x);
    auto layer = SageLayer::create(16, 16, {agg, NodeNormalization::BatchNorm, false}, rng);
    NoGradGuard no_grad;
    for (auto _ : state) benchmark::DoNotOptimize(layer.forward(ctx, x, true));
    state.SetLabel(to_string(agg));
}
BENCHMARK(BM_SageForward)
    ->ArgsProduct({{static_cast<long>(Aggregator::Mean), static_cast<long>(Aggregator::Pool),
                    static_cast<long>(Aggregator::Lstm)},
                   {20, 80}});

void BM_SageBackward(benchmark::State& state) {
    const auto nodes = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    const auto x = random_input(nodes, 16, rng, true);
    const auto ctx = window_graph(x);
    auto layer = SageLayer::create(16, 16, {Aggregator::Mean, NodeNormalization::BatchNorm, false}, rng);
    for (auto _ : state) backward(ops::sum(layer.forward(ctx, x, true)));
}
BENCHMARK(BM_SageBackward)->Arg(20)->Arg(80);

void BM_GatForward(benchmark::State& state) {
    const auto heads = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    const auto x = random_input(20, 16, rng);
    const auto ctx = window_graph(x);
    auto layer = GatLayer::create(16, 8, heads, HeadMode::Concat, NodeNormalization::BatchNorm, rng);
    NoGradGuard no_grad;
    for (auto _ : state) benchmark::DoNotOptimize(layer.forward(ctx, x, true));
}
BENCHMARK(BM_GatForward)->Arg(1)->Arg(4);

void BM_ConvBranch(benchmark::State& state) {
    std::mt19937_64 rng(4);
    const auto x = random_input(20, 16, rng);
    auto branch = ConvBranch::create(16, {10, 10}, 3, rng);
    NoGradGuard no_grad;
    for (auto _ : state) benchmark::DoNotOptimize(branch.forward(x));
}
BENCHMARK(BM_ConvBranch);

void BM_LstmBranch(benchmark::State& state) {
    std::mt19937_64 rng(5);
    const auto x = random_input(20, 16, rng);
    auto branch = LstmBranch::create(16, 16, kLstmBranchLayers, 3, rng);
    NoGradGuard no_grad;
    for (auto _ : state) benchmark::DoNotOptimize(branch.forward(x));
}
BENCHMARK(BM_LstmBranch);

void BM_BuildGraph(benchmark::State& state) {
    const auto nodes = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(6);
    const auto x = random_input(nodes, 16, rng);
    for (auto _ : state) benchmark::DoNotOptimize(window_graph(x));
}
BENCHMARK(BM_BuildGraph)->Arg(20)->Arg(200);

}  // namespace
