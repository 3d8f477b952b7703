#include "sagechain/geometric.hpp"

#include <algorithm>
#include <limits>

#include "sagechain/adam.hpp"
#include "sagechain/dataset.hpp"
#include "sagechain/error.hpp"
#include "sagechain/ops.hpp"
#include "sagechain/schema.hpp"

namespace sagechain {

std::string to_string(Aggregator a) {
    switch (a) {
        case Aggregator::Mean: return "mean";
        case Aggregator::Pool: return "pool";
        case Aggregator::Lstm: return "lstm";
    }
    return "mean";
}

Aggregator parse_aggregator(std::string_view text) {
    const auto key = normalize_key(text);
    if (key == "mean") return Aggregator::Mean;
    if (key == "pool" || key == "maxpool") return Aggregator::Pool;
    if (key == "lstm") return Aggregator::Lstm;
    throw ConfigError("unknown aggregator '" + std::string(text) + "' (expected mean, pool or lstm)");
}

std::string to_string(NodeNormalization n) {
    switch (n) {
        case NodeNormalization::BatchNorm: return "batchnorm";
        case NodeNormalization::L2: return "l2";
        case NodeNormalization::None: return "none";
    }
    return "batchnorm";
}

NodeNormalization parse_normalization(std::string_view text) {
    const auto key = normalize_key(text);
    if (key == "batchnorm" || key == "bn") return NodeNormalization::BatchNorm;
    if (key == "l2") return NodeNormalization::L2;
    if (key == "none") return NodeNormalization::None;
    throw ConfigError("unknown normalization '" + std::string(text) + "' (expected batchnorm, l2 or none)");
}

Vec aggregate_mean(std::span<const double> self, const std::vector<Vec>& neighbors) {
    std::vector<const Vec*> order;
    for (const auto& n : neighbors) {
        if (n.size() != self.size()) throw DimensionError("aggregate_mean: neighbor dimension differs from self");
        order.push_back(&n);
    }
    std::sort(order.begin(), order.end(), [](const Vec* a, const Vec* b) { return *a < *b; });
    Vec out(self.begin(), self.end());
    for (const Vec* n : order)
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += (*n)[j];
    for (double& v : out) v /= static_cast<double>(neighbors.size() + 1);
    return out;
}

Vec aggregate_pool(std::span<const double> self, const std::vector<Vec>& neighbors, const Tensor& pool_weight,
                   const Tensor& pool_bias) {
    const std::size_t d_out = pool_weight.shape()[0], d_in = pool_weight.shape()[1];
    if (self.size() != d_in) throw DimensionError("aggregate_pool: input dimension differs from W_pool");
    auto transform = [&](std::span<const double> h) {
        Vec y(d_out);
        for (std::size_t o = 0; o < d_out; ++o) {
            double acc = pool_bias[o];
            for (std::size_t i = 0; i < d_in; ++i) acc += pool_weight.at(o, i) * h[i];
            y[o] = std::max(acc, 0.0);
        }
        return y;
    };
    if (neighbors.empty()) return transform(self);
    Vec out(d_out, -std::numeric_limits<double>::infinity());
    for (const auto& n : neighbors) {
        if (n.size() != d_in) throw DimensionError("aggregate_pool: neighbor dimension differs from W_pool");
        const auto y = transform(n);
        for (std::size_t o = 0; o < d_out; ++o) out[o] = std::max(out[o], y[o]);
    }
    return out;
}

std::vector<std::size_t> lstm_visit_order(std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    seeded_shuffle(order, seed);
    return order;
}

Vec aggregate_lstm(std::span<const double> self, const std::vector<Vec>& neighbors, const LstmParams& params,
                   std::uint64_t seed) {
    const std::size_t d = params.input;
    std::vector<double> seq;
    if (neighbors.empty()) {
        seq.assign(self.begin(), self.end());
    } else {
        for (std::size_t i : lstm_visit_order(neighbors.size(), seed)) {
            if (neighbors[i].size() != d) throw DimensionError("aggregate_lstm: neighbor dimension differs from LSTM input");
            seq.insert(seq.end(), neighbors[i].begin(), neighbors[i].end());
        }
    }
    if (seq.size() % d != 0 || seq.empty()) throw DimensionError("aggregate_lstm: input dimension differs from LSTM input");
    NoGradGuard no_grad;
    const std::size_t steps = seq.size() / d;
    const auto hs = params.run(Tensor::from({steps, d}, std::move(seq)));
    const std::size_t H = params.hidden;
    return Vec(hs.data().end() - static_cast<std::ptrdiff_t>(H), hs.data().end());
}

SageLayer SageLayer::create(std::size_t in_dim, std::size_t out_dim, SageLayerOptions options, std::mt19937_64& rng) {
    SageLayer l;
    l.in_dim = in_dim;
    l.out_dim = out_dim;
    l.options = options;
    const std::size_t fan_in = options.convolutional_variant ? in_dim : 2 * in_dim;
    l.weight = glorot_uniform({out_dim, fan_in}, fan_in, out_dim, rng);
    l.bias = Tensor::zeros({out_dim}, true);
    if (options.aggregator == Aggregator::Pool) {
        l.pool_weight = glorot_uniform({in_dim, in_dim}, in_dim, in_dim, rng);
        l.pool_bias = Tensor::zeros({in_dim}, true);
    } else if (options.aggregator == Aggregator::Lstm) {
        l.lstm = LstmParams::create(in_dim, in_dim, rng);
        l.lstm_seed = rng();
    }
    if (options.normalization == NodeNormalization::BatchNorm) l.norm = BatchNorm::create(out_dim);
    return l;
}

Tensor SageLayer::aggregate(const GraphContext& graph, const Tensor& h) const {
    if (h.rank() != 2 || h.shape()[0] != graph.n_nodes || h.shape()[1] != in_dim) {
        throw DimensionError("sage layer expects node matrix [" + std::to_string(graph.n_nodes) + ", " +
                             std::to_string(in_dim) + "], got " + shape_to_string(h.shape()));
    }
    switch (options.aggregator) {
        case Aggregator::Mean: return ops::matmul(graph.mean_matrix, h);
        case Aggregator::Pool: return ops::max_over(ops::relu(ops::linear(h, pool_weight, pool_bias)), graph.pool_sets);
        case Aggregator::Lstm: {
            std::vector<Tensor> finals;
            finals.reserve(graph.n_nodes);
            for (std::size_t v = 0; v < graph.n_nodes; ++v) {
                std::vector<std::size_t> seq;
                const auto& nf = graph.neighbors[v];
                if (nf.empty()) {
                    seq.push_back(v);
                } else {
                    for (std::size_t i : lstm_visit_order(nf.size(), lstm_seed ^ (0x9E3779B97F4A7C15ULL * (v + 1))))
                        seq.push_back(nf[i]);
                }
                const auto hs = lstm.run(ops::gather_rows(h, seq));
                finals.push_back(ops::slice_rows(hs, seq.size() - 1, seq.size()));
            }
            return ops::concat_rows(finals);
        }
    }
    throw ConfigError("unknown aggregator");
}

Tensor SageLayer::forward(const GraphContext& graph, const Tensor& h, bool training) {
    const Tensor agg = aggregate(graph, h);
    Tensor combined;
    if (options.convolutional_variant) {
        // The mean aggregator already folds h_v in; pool/lstm use the aggregate alone.
        combined = agg;
    } else {
        combined = ops::concat_cols(h, agg);
    }
    Tensor out = ops::relu(ops::linear(combined, weight, bias));
    switch (options.normalization) {
        case NodeNormalization::BatchNorm: return norm.forward(out, training);
        case NodeNormalization::L2: return ops::l2_normalize_rows(out);
        case NodeNormalization::None: return out;
    }
    return out;
}

void SageLayer::collect(ParameterList& out, const std::string& prefix, const std::string& group) const {
    out.push_back({prefix + ".weight", group, weight});
    out.push_back({prefix + ".bias", group, bias});
    if (options.aggregator == Aggregator::Pool) {
        out.push_back({prefix + ".pool_weight", group, pool_weight});
        out.push_back({prefix + ".pool_bias", group, pool_bias});
    } else if (options.aggregator == Aggregator::Lstm) {
        lstm.collect(out, prefix + ".lstm", group);
    }
    if (options.normalization == NodeNormalization::BatchNorm) norm.collect(out, prefix + ".bn", group);
}

}  // namespace sagechain
