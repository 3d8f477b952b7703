#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sagechain/checkpoint.hpp"
#include "sagechain/graph_context.hpp"
#include "sagechain/lstm.hpp"
#include "sagechain/tensor.hpp"

namespace sagechain {

enum class Aggregator { Mean, Pool, Lstm };
enum class NodeNormalization { BatchNorm, L2, None };

std::string to_string(Aggregator a);
Aggregator parse_aggregator(std::string_view text);
std::string to_string(NodeNormalization n);
NodeNormalization parse_normalization(std::string_view text);

// ---- aggregators over plain vectors -------------------------------------

using Vec = std::vector<double>;

// Element-wise mean of {self} and the neighbors. Neighbors are summed in a
// canonical (lexicographic) order so the result does not depend on how the
// set is listed.
Vec aggregate_mean(std::span<const double> self, const std::vector<Vec>& neighbors);

// Element-wise max of relu(W_pool h + b) over the neighbors; with no
// neighbors, self stands in as the only member. pool_weight is (d_out x d_in).
Vec aggregate_pool(std::span<const double> self, const std::vector<Vec>& neighbors, const Tensor& pool_weight,
                   const Tensor& pool_bias);

// Final hidden state of the LSTM run over a seeded permutation of the
// neighbors; with no neighbors, over [self].
Vec aggregate_lstm(std::span<const double> self, const std::vector<Vec>& neighbors, const LstmParams& params,
                   std::uint64_t seed);

// Order in which the LSTM aggregator visits `count` neighbors.
std::vector<std::size_t> lstm_visit_order(std::size_t count, std::uint64_t seed);

// ---- batch normalization -------------------------------------------------

struct BatchNorm {
    std::size_t channels = 0;
    Tensor gamma;
    Tensor beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    static BatchNorm create(std::size_t channels);

    // Training mode normalizes with batch statistics and updates the running
    // ones; a single-row batch falls back to running statistics.
    Tensor forward(const Tensor& x, bool training);
    void collect(ParameterList& out, const std::string& prefix, const std::string& group) const;
};

// ---- GraphSAGE -----------------------------------------------------------

struct SageLayerOptions {
    Aggregator aggregator = Aggregator::Mean;
    NodeNormalization normalization = NodeNormalization::BatchNorm;
    // W * aggregate(h_v and neighbors) instead of W * concat(h_v, aggregate).
    bool convolutional_variant = false;
};

struct SageLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    SageLayerOptions options;
    Tensor weight;  // out x 2in (concat) or out x in (convolutional variant)
    Tensor bias;    // out
    Tensor pool_weight;  // in x in, pool aggregator only
    Tensor pool_bias;    // in
    LstmParams lstm;     // in -> in, lstm aggregator only
    std::uint64_t lstm_seed = 0;
    BatchNorm norm;      // batch-norm normalization only

    static SageLayer create(std::size_t in_dim, std::size_t out_dim, SageLayerOptions options, std::mt19937_64& rng);

    // h_N(v) for every node, (n x in).
    Tensor aggregate(const GraphContext& graph, const Tensor& h) const;
    // relu(W [h_v, h_N(v)] + b) followed by the configured normalization.
    Tensor forward(const GraphContext& graph, const Tensor& h, bool training);

    void collect(ParameterList& out, const std::string& prefix, const std::string& group) const;
};

// ---- graph attention -----------------------------------------------------

enum class HeadMode { Concat, Average };

struct GatLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;  // per head
    HeadMode mode = HeadMode::Concat;
    double leaky_slope = 0.2;
    std::vector<Tensor> weight;    // per head, out x in
    std::vector<Tensor> attn_src;  // per head, out x 1 (first half of the attention vector)
    std::vector<Tensor> attn_dst;  // per head, out x 1 (second half)
    NodeNormalization normalization = NodeNormalization::BatchNorm;
    BatchNorm norm;

    static GatLayer create(std::size_t in_dim, std::size_t out_dim, std::size_t heads, HeadMode mode,
                           NodeNormalization normalization, std::mt19937_64& rng);

    std::size_t heads() const { return weight.size(); }
    std::size_t output_dim() const { return mode == HeadMode::Concat ? out_dim * heads() : out_dim; }

    // Softmax-normalized coefficients sa(m, n) over {m} and NF(m) for one head.
    Tensor attention(const GraphContext& graph, const Tensor& h, std::size_t head) const;
    // Multi-head attention output through relu, before normalization.
    Tensor attend(const GraphContext& graph, const Tensor& h) const;
    Tensor forward(const GraphContext& graph, const Tensor& h, bool training);

    void collect(ParameterList& out, const std::string& prefix, const std::string& group) const;
};

// ---- unsupervised graph loss --------------------------------------------

struct NegSampleBatch {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::vector<std::size_t> negatives;
};

// -log sigma(z_u . z_v) - Q * mean_n log sigma(-z_u . z_n) over the first Q
// negatives. z_u, z_v: 1 x d; negatives: m x d with m >= Q >= 1.
Tensor unsupervised_graph_loss(const Tensor& z_u, const Tensor& z_v, const Tensor& negatives, std::size_t q);

// Same loss over rows of an embedding matrix, averaged across batches.
Tensor unsupervised_graph_loss(const Tensor& embeddings, const std::vector<NegSampleBatch>& batches);

}  // namespace sagechain
