#pragma once

#include <random>
#include <string>

#include "sagechain/checkpoint.hpp"
#include "sagechain/tensor.hpp"

namespace sagechain {

// Weights of one LSTM layer, gate order i, f, g, o.
struct LstmParams {
    std::size_t input = 0;
    std::size_t hidden = 0;
    Tensor w_ih;  // 4H x input
    Tensor w_hh;  // 4H x H
    Tensor bias;  // 4H

    static LstmParams create(std::size_t input, std::size_t hidden, std::mt19937_64& rng);
    static LstmParams zeros(std::size_t input, std::size_t hidden);

    // Hidden state at every step of `sequence` (T x input) from zero state.
    Tensor run(const Tensor& sequence) const;

    void collect(ParameterList& out, const std::string& prefix, const std::string& group) const;
};

// One cell step built from primitive ops (the fused sequence op is checked
// against this).
struct LstmState {
    Tensor h;  // 1 x H
    Tensor c;  // 1 x H
};

LstmState lstm_cell_forward(const Tensor& x, const LstmState& previous, const LstmParams& params);

}  // namespace sagechain
