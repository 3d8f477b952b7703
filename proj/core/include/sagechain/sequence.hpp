#pragma once

#include <random>
#include <string>
#include <vector>

#include "sagechain/checkpoint.hpp"
#include "sagechain/lstm.hpp"
#include "sagechain/tensor.hpp"

namespace sagechain {

inline constexpr std::size_t kConvWidth = 5;
inline constexpr double kConvLeak = 0.1;
inline constexpr std::size_t kLstmBranchLayers = 5;

struct Conv1dLayer {
    Tensor weight;  // kernels x in_channels x width
    Tensor bias;    // kernels

    static Conv1dLayer create(std::size_t in_channels, std::size_t kernels, std::mt19937_64& rng);
    std::size_t kernels() const { return weight.shape()[0]; }
    std::size_t in_channels() const { return weight.shape()[1]; }
};

// Valid convolution over the window axis (features are channels), stride 1,
// followed by LeakyReLU(0.1). Output length is input length - 4.
Tensor conv1d_forward(const Tensor& x, const Conv1dLayer& layer);

// Pads a shortened sequence back to `length` rows by repeating its edge rows,
// splitting the shortfall evenly between the two ends (front gets the floor).
Tensor replicate_edges(const Tensor& x, std::size_t length);

// Two convolution layers, edge replication back to the window length, a
// per-node projection to the classes and log-softmax.
struct ConvBranch {
    std::vector<Conv1dLayer> layers;
    Tensor head_weight;  // classes x last kernels
    Tensor head_bias;

    static ConvBranch create(std::size_t features, const std::vector<std::size_t>& kernel_counts, std::size_t classes,
                             std::mt19937_64& rng);
    Tensor forward(const Tensor& window) const;
    void collect(ParameterList& out, const std::string& prefix, const std::string& group) const;
};

// Stacked LSTM over the window's rows as time steps, with a shared linear head
// applied to every step's top-layer hidden state, then log-softmax.
struct LstmBranch {
    std::vector<LstmParams> layers;
    Tensor head_weight;  // classes x hidden
    Tensor head_bias;

    static LstmBranch create(std::size_t features, std::size_t hidden, std::size_t n_layers, std::size_t classes,
                             std::mt19937_64& rng);
    // Top-layer hidden states (T x hidden).
    Tensor hidden_states(const Tensor& window) const;
    Tensor forward(const Tensor& window) const;
    void collect(ParameterList& out, const std::string& prefix, const std::string& group) const;
};

}  // namespace sagechain
