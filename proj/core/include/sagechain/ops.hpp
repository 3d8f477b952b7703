#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sagechain/tensor.hpp"

// Differentiable primitives. Matrices are row-major rank-2 tensors; vectors
// (biases, per-channel parameters) are rank-1. Every op checks shapes and
// throws DimensionError naming both operands on mismatch.
namespace sagechain::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// x (n x in) * w^T (in x out) + bias (out). bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias = {});

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
// Broadcasts a length-cols vector over every row.
Tensor add_row_vector(const Tensor& a, const Tensor& v);
Tensor mul_row_vector(const Tensor& a, const Tensor& v);
// (n x 1) column plus (1 x m) row -> n x m with out(i,j) = col(i) + row(j).
Tensor outer_sum(const Tensor& col, const Tensor& row);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices);
Tensor reshape(const Tensor& a, Shape shape);

Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double alpha);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
// log(sigmoid(x)) evaluated without overflow.
Tensor log_sigmoid(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Row v of the result is the element-wise max over rows sets[v] of `a`.
// Each set must be non-empty. Ties route the gradient to the first maximum.
Tensor max_over(const Tensor& a, const std::vector<std::vector<std::size_t>>& sets);

// Each row divided by its Euclidean norm; zero rows stay zero.
Tensor l2_normalize_rows(const Tensor& a);

Tensor log_softmax_rows(const Tensor& logits);

// Row-wise softmax restricted to entries where mask != 0; masked entries are 0.
// Rows with an empty mask are rejected.
Tensor masked_softmax_rows(const Tensor& scores, std::span<const unsigned char> mask);

// Mean negative log-likelihood of `targets` under row log-probabilities.
Tensor nll_loss(const Tensor& log_probs, std::span<const int> targets);
// log_softmax followed by nll_loss.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);

// Column-wise standardization by batch mean and population variance:
// (x - mean) / sqrt(var + eps). Batch statistics are returned through the
// optional out-pointers.
Tensor batch_standardize(const Tensor& x, double eps, std::vector<double>* batch_mean = nullptr,
                         std::vector<double>* batch_var = nullptr);

// Valid 1-D cross-correlation over the row axis. x: (length x in_ch),
// weight: (kernels x in_ch x width), bias: (kernels). Stride 1, no padding.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Single-layer LSTM over the rows of x (T x in) from zero state.
// w_ih: (4H x in), w_hh: (4H x H), bias: (4H). Gate order i, f, g, o.
// Returns the hidden state at every step (T x H).
Tensor lstm_sequence(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& bias);

}  // namespace sagechain::ops
