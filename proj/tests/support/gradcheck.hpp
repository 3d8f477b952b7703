#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sagechain/tensor.hpp"

namespace sagechain::testing {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;  // "param[i] analytic vs numeric"
    std::size_t checked = 0;
};

// Compares backward() against central differences for every entry of every
// parameter. Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
// exact zeros (a bias feeding batch norm) from dividing rounding noise by
// nothing.
GradCheckResult check_gradients(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params, double h = 1e-5,
                                double floor = 1e-5);

// Scalar probe: sum(output * R) for a fixed random R, so every output entry
// contributes a distinct weight.
Tensor probe_loss(const Tensor& output, const Tensor& weights);
// Adds U(-spread, spread) to every entry. Zero-initialized biases put ReLU and
// max inputs exactly on their kinks, where finite differences are meaningless.
void jitter(std::vector<Tensor>& params, std::mt19937_64& rng, double spread = 0.3);
Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = false);

}  // namespace sagechain::testing
