#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sagechain/tensor.hpp"

namespace sagechain {

// Row-major feature block with one label per row.
struct LabeledRows {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<int> labels;

    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

// Euclidean k-nearest-neighbour majority vote. Distance ties go to the lower
// training index; vote ties to the smallest class.
std::vector<int> knn_baseline(const LabeledRows& train, const LabeledRows& test, std::size_t k, int classes);

struct LogisticModel {
    Tensor weight;  // classes x features
    Tensor bias;    // classes
    std::vector<int> predict(const LabeledRows& rows) const;
};

// Mean cross-entropy of a multinomial logistic model on `rows`.
Tensor logistic_loss(const Tensor& weight, const Tensor& bias, const LabeledRows& rows);

// Full-batch gradient descent from a zero start, which is deterministic and
// predicts uniformly before the first step.
LogisticModel fit_logistic(const LabeledRows& train, int classes, std::size_t epochs, double lr);

std::vector<int> logistic_baseline(const LabeledRows& train, const LabeledRows& test, int classes,
                                   std::size_t epochs = 500, double lr = 0.5);

}  // namespace sagechain
