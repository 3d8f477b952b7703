#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sagechain/tensor.hpp"

namespace sagechain {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// Adam with bias correction. Parameters are registered in groups that share a
// learning rate; weight decay enters as an L2 term added to the gradient.
class Adam {
public:
    struct Group {
        std::string name;
        AdamHyper hyper;
        std::vector<Tensor> params;
        std::vector<std::vector<double>> m;
        std::vector<std::vector<double>> v;
    };

    std::size_t add_group(std::string name, std::vector<Tensor> params, AdamHyper hyper);

    void step();
    void zero_grad();

    std::uint64_t steps() const noexcept { return t_; }
    void set_steps(std::uint64_t t) noexcept { t_ = t; }
    std::vector<Group>& groups() noexcept { return groups_; }
    const std::vector<Group>& groups() const noexcept { return groups_; }

private:
    std::vector<Group> groups_;
    std::uint64_t t_ = 0;
};

// Scales gradients so their joint L2 norm is at most max_norm. Returns the
// norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(std::vector<Tensor>& params, double max_norm);

// Glorot-uniform init: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

// Uniform double in [lo, hi) from the raw 64-bit engine output, so results do
// not depend on the standard library's distribution implementation.
double uniform_real(std::mt19937_64& rng, double lo, double hi);

}  // namespace sagechain
