// One optimizer step on a single window, per model variant.

#include <benchmark/benchmark.h>

#include <sstream>

#include "sagechain/adam.hpp"
#include "sagechain/dataset.hpp"
#include "sagechain/synth.hpp"
#include "sagechain/trainer.hpp"

using namespace sagechain;

namespace {

void BM_WindowStep(benchmark::State& state) {
    const auto variant = static_cast<Variant>(state.range(0));
    TrainConfig config;
    config.dataset = DatasetId::SmartLogistics;
    config.task = "traffic_status";
    config.variant = variant;
    std::istringstream in(synth_csv(DatasetId::SmartLogistics, 200, 9));
    const auto data = prepare_dataset(load_dataset(in, config.dataset), config.task, config.balance, config.seed);
    const auto scaled = standard_scale(data.matrix);
    const auto ws = window_partition(scaled.rows, config.window_size);
    const auto window = make_window(scaled, data.labels, ws.windows.front(), 0, {config.threshold, config.leak_alpha});

    auto model = HybridModel::build(model_spec(config, data.matrix.cols, static_cast<std::size_t>(data.classes())));
    Adam adam;
    adam.add_group("all", model.group_parameters(kGraphGroup), {.lr = config.lr_graph});
    const auto seq = model.group_parameters(kSequenceGroup);
    if (!seq.empty()) adam.add_group("seq", seq, {.lr = config.lr_seq});
    for (auto _ : state) {
        adam.zero_grad();
        const auto heads = model.forward(window.graph, true);
        auto loss = total_loss(window.labels, heads, config.loss_weights);
        backward(loss.total);
        adam.step();
    }
    state.SetLabel(to_string(variant));
}
BENCHMARK(BM_WindowStep)
    ->Arg(static_cast<long>(Variant::HGSN))
    ->Arg(static_cast<long>(Variant::HGatN))
    ->Arg(static_cast<long>(Variant::GSN))
    ->Arg(static_cast<long>(Variant::GatN));

}  // namespace
