#include "sagechain/sequence.hpp"

#include <algorithm>

#include "sagechain/adam.hpp"
#include "sagechain/error.hpp"
#include "sagechain/ops.hpp"

namespace sagechain {

LstmParams LstmParams::create(std::size_t input, std::size_t hidden, std::mt19937_64& rng) {
    LstmParams p;
    p.input = input;
    p.hidden = hidden;
    p.w_ih = glorot_uniform({4 * hidden, input}, input, 4 * hidden, rng);
    p.w_hh = glorot_uniform({4 * hidden, hidden}, hidden, 4 * hidden, rng);
    p.bias = Tensor::zeros({4 * hidden}, true);
    return p;
}

LstmParams LstmParams::zeros(std::size_t input, std::size_t hidden) {
    LstmParams p;
    p.input = input;
    p.hidden = hidden;
    p.w_ih = Tensor::zeros({4 * hidden, input}, true);
    p.w_hh = Tensor::zeros({4 * hidden, hidden}, true);
    p.bias = Tensor::zeros({4 * hidden}, true);
    return p;
}

Tensor LstmParams::run(const Tensor& sequence) const { return ops::lstm_sequence(sequence, w_ih, w_hh, bias); }

void LstmParams::collect(ParameterList& out, const std::string& prefix, const std::string& group) const {
    out.push_back({prefix + ".w_ih", group, w_ih});
    out.push_back({prefix + ".w_hh", group, w_hh});
    out.push_back({prefix + ".bias", group, bias});
}

LstmState lstm_cell_forward(const Tensor& x, const LstmState& previous, const LstmParams& params) {
    const std::size_t H = params.hidden;
    const Tensor row = ops::reshape(x, {1, params.input});
    Tensor z = ops::add(ops::linear(row, params.w_ih, params.bias), ops::linear(previous.h, params.w_hh));
    const Tensor i = ops::sigmoid(ops::slice_cols(z, 0, H));
    const Tensor f = ops::sigmoid(ops::slice_cols(z, H, 2 * H));
    const Tensor g = ops::tanh(ops::slice_cols(z, 2 * H, 3 * H));
    const Tensor o = ops::sigmoid(ops::slice_cols(z, 3 * H, 4 * H));
    const Tensor c = ops::add(ops::mul(f, previous.c), ops::mul(i, g));
    return {ops::mul(o, ops::tanh(c)), c};
}

Conv1dLayer Conv1dLayer::create(std::size_t in_channels, std::size_t kernels, std::mt19937_64& rng) {
    Conv1dLayer l;
    l.weight = glorot_uniform({kernels, in_channels, kConvWidth}, in_channels * kConvWidth, kernels * kConvWidth, rng);
    l.bias = Tensor::zeros({kernels}, true);
    return l;
}

Tensor conv1d_forward(const Tensor& x, const Conv1dLayer& layer) {
    return ops::leaky_relu(ops::conv1d(x, layer.weight, layer.bias), kConvLeak);
}

Tensor replicate_edges(const Tensor& x, std::size_t length) {
    const std::size_t len = x.rows();
    if (len == 0 || len > length) throw DimensionError("replicate_edges: cannot restore " + std::to_string(len) + " rows to " + std::to_string(length));
    const std::size_t front = (length - len) / 2;
    std::vector<std::size_t> idx(length);
    for (std::size_t i = 0; i < length; ++i) {
        const auto shifted = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(front);
        idx[i] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(shifted, 0, static_cast<std::ptrdiff_t>(len) - 1));
    }
    return ops::gather_rows(x, idx);
}

ConvBranch ConvBranch::create(std::size_t features, const std::vector<std::size_t>& kernel_counts, std::size_t classes,
                              std::mt19937_64& rng) {
    if (kernel_counts.empty()) throw ConfigError("convolution branch needs at least one layer");
    ConvBranch b;
    std::size_t in = features;
    for (std::size_t k : kernel_counts) {
        b.layers.push_back(Conv1dLayer::create(in, k, rng));
        in = k;
    }
    b.head_weight = glorot_uniform({classes, in}, in, classes, rng);
    b.head_bias = Tensor::zeros({classes}, true);
    return b;
}

Tensor ConvBranch::forward(const Tensor& window) const {
    Tensor x = window;
    for (const auto& l : layers) x = conv1d_forward(x, l);
    x = replicate_edges(x, window.rows());
    return ops::log_softmax_rows(ops::linear(x, head_weight, head_bias));
}

void ConvBranch::collect(ParameterList& out, const std::string& prefix, const std::string& group) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        out.push_back({prefix + ".conv" + std::to_string(i) + ".weight", group, layers[i].weight});
        out.push_back({prefix + ".conv" + std::to_string(i) + ".bias", group, layers[i].bias});
    }
    out.push_back({prefix + ".head.weight", group, head_weight});
    out.push_back({prefix + ".head.bias", group, head_bias});
}

LstmBranch LstmBranch::create(std::size_t features, std::size_t hidden, std::size_t n_layers, std::size_t classes,
                              std::mt19937_64& rng) {
    if (n_layers == 0) throw ConfigError("LSTM branch needs at least one layer");
    LstmBranch b;
    std::size_t in = features;
    for (std::size_t i = 0; i < n_layers; ++i) {
        b.layers.push_back(LstmParams::create(in, hidden, rng));
        in = hidden;
    }
    b.head_weight = glorot_uniform({classes, hidden}, hidden, classes, rng);
    b.head_bias = Tensor::zeros({classes}, true);
    return b;
}

Tensor LstmBranch::hidden_states(const Tensor& window) const {
    Tensor x = window;
    for (const auto& l : layers) x = l.run(x);
    return x;
}

Tensor LstmBranch::forward(const Tensor& window) const {
    return ops::log_softmax_rows(ops::linear(hidden_states(window), head_weight, head_bias));
}

void LstmBranch::collect(ParameterList& out, const std::string& prefix, const std::string& group) const {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(out, prefix + ".lstm" + std::to_string(i), group);
    out.push_back({prefix + ".head.weight", group, head_weight});
    out.push_back({prefix + ".head.bias", group, head_bias});
}

}  // namespace sagechain
