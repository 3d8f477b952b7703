#include "sagechain/model.hpp"

#include <bit>
#include <cmath>

#include <json.hpp>

#include "sagechain/adam.hpp"
#include "sagechain/error.hpp"
#include "sagechain/ops.hpp"
#include "sagechain/schema.hpp"

namespace sagechain {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::HGSN: return "h-gsn";
        case Variant::HGatN: return "h-gatn";
        case Variant::GSN: return "gsn";
        case Variant::GatN: return "gatn";
    }
    return "h-gsn";
}

Variant parse_variant(std::string_view text) {
    const auto key = normalize_key(text);
    if (key == "hgsn") return Variant::HGSN;
    if (key == "hgatn") return Variant::HGatN;
    if (key == "gsn") return Variant::GSN;
    if (key == "gatn") return Variant::GatN;
    throw ConfigError("unknown variant '" + std::string(text) + "' (expected h-gsn, h-gatn, gsn or gatn)");
}

bool is_hybrid(Variant v) { return v == Variant::HGSN || v == Variant::HGatN; }
bool uses_attention(Variant v) { return v == Variant::HGatN || v == Variant::GatN; }

std::vector<std::size_t> graph_layer_dims(std::size_t features, std::size_t classes, std::size_t layers) {
    if (layers == 0) throw ConfigError("graph stack needs at least one layer");
    if (features == 0 || classes == 0) throw ConfigError("graph stack needs positive feature and class counts");
    const std::size_t target = std::min(features, classes);
    std::vector<std::size_t> dims(layers, target);
    dims[0] = features;
    if (layers <= 2) {
        if (layers == 2) dims[1] = target;
        return dims;
    }
    const std::size_t gap = features - target;
    const std::size_t steps = layers - 2;
    for (std::size_t k = 1; k + 1 < layers; ++k) {
        const std::size_t drop = (gap * k + steps - 1) / steps;  // ceil
        dims[k] = features - drop;
    }
    return dims;
}

HybridModel HybridModel::build(const ModelSpec& spec) {
    if (spec.features == 0 || spec.classes < 2) throw ConfigError("model needs features and at least 2 classes");
    HybridModel m;
    m.spec_ = spec;
    std::mt19937_64 rng(spec.seed);
    const auto dims = graph_layer_dims(spec.features, spec.classes, spec.graph_layers);
    std::size_t in = spec.features;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const bool last = k + 1 == dims.size();
        if (uses_attention(spec.variant)) {
            auto layer = GatLayer::create(in, dims[k], spec.attention_heads, last ? HeadMode::Average : HeadMode::Concat,
                                          spec.sage.normalization, rng);
            in = layer.output_dim();
            m.gat_.push_back(std::move(layer));
        } else {
            m.sage_.push_back(SageLayer::create(in, dims[k], spec.sage, rng));
            in = dims[k];
        }
    }
    m.head_weight_ = glorot_uniform({spec.classes, in}, in, spec.classes, rng);
    m.head_bias_ = Tensor::zeros({spec.classes}, true);

    if (is_hybrid(spec.variant)) {
        auto kernels = spec.conv_kernels;
        if (kernels.empty()) kernels = {spec.features, spec.classes};
        m.conv_ = ConvBranch::create(spec.features, kernels, spec.classes, rng);
        const std::size_t hidden = spec.lstm_hidden ? spec.lstm_hidden : spec.features;
        m.lstm_ = LstmBranch::create(spec.features, hidden, spec.lstm_layers, spec.classes, rng);
    }
    return m;
}

HeadOutputs HybridModel::forward(const GraphContext& graph, bool training) {
    if (!graph.features.defined() || graph.features.cols() != spec_.features) {
        throw DimensionError("model expects " + std::to_string(spec_.features) + " features per node, got " +
                             (graph.features.defined() ? shape_to_string(graph.features.shape()) : std::string("none")));
    }
    HeadOutputs out;
    Tensor h = graph.features;
    for (auto& layer : sage_) h = layer.forward(graph, h, training);
    for (auto& layer : gat_) h = layer.forward(graph, h, training);
    out.graph_features = h;
    out.graph = ops::log_softmax_rows(ops::linear(h, head_weight_, head_bias_));
    if (conv_) {
        Tensor x = graph.features;
        for (const auto& l : conv_->layers) x = conv1d_forward(x, l);
        out.conv_features = replicate_edges(x, graph.features.rows());
        out.conv = ops::log_softmax_rows(ops::linear(out.conv_features, conv_->head_weight, conv_->head_bias));
    }
    if (lstm_) {
        out.lstm_features = lstm_->hidden_states(graph.features);
        out.lstm = ops::log_softmax_rows(ops::linear(out.lstm_features, lstm_->head_weight, lstm_->head_bias));
    }
    return out;
}

ParameterList HybridModel::parameters() const {
    ParameterList out;
    for (std::size_t k = 0; k < sage_.size(); ++k) sage_[k].collect(out, "sage" + std::to_string(k), kGraphGroup);
    for (std::size_t k = 0; k < gat_.size(); ++k) gat_[k].collect(out, "gat" + std::to_string(k), kGraphGroup);
    out.push_back({"graph_head.weight", kGraphGroup, head_weight_});
    out.push_back({"graph_head.bias", kGraphGroup, head_bias_});
    if (conv_) conv_->collect(out, "conv", kSequenceGroup);
    if (lstm_) lstm_->collect(out, "lstm", kSequenceGroup);
    return out;
}

std::vector<Tensor> HybridModel::group_parameters(const std::string& group) const {
    std::vector<Tensor> out;
    for (const auto& p : parameters())
        if (p.group == group) out.push_back(p.value);
    return out;
}

std::size_t HybridModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.value.size();
    return n;
}

std::uint64_t HybridModel::checksum() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& p : parameters())
        for (double v : p.value.data()) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xFF;
                h *= 1099511628211ULL;
            }
        }
    return h;
}

std::vector<BatchNorm*> HybridModel::batch_norms() {
    std::vector<BatchNorm*> out;
    for (auto& l : sage_)
        if (l.options.normalization == NodeNormalization::BatchNorm) out.push_back(&l.norm);
    for (auto& l : gat_)
        if (l.normalization == NodeNormalization::BatchNorm) out.push_back(&l.norm);
    return out;
}

std::vector<const BatchNorm*> HybridModel::batch_norms() const {
    std::vector<const BatchNorm*> out;
    for (const auto& l : sage_)
        if (l.options.normalization == NodeNormalization::BatchNorm) out.push_back(&l.norm);
    for (const auto& l : gat_)
        if (l.normalization == NodeNormalization::BatchNorm) out.push_back(&l.norm);
    return out;
}

HybridModel::Snapshot HybridModel::snapshot() const {
    Snapshot s;
    for (const auto& p : parameters()) s.values.emplace_back(p.value.data().begin(), p.value.data().end());
    for (const auto* bn : batch_norms()) {
        s.running.push_back(bn->running_mean);
        s.running.push_back(bn->running_var);
    }
    return s;
}

void HybridModel::restore(const Snapshot& snapshot) {
    auto params = parameters();
    if (params.size() != snapshot.values.size()) throw DimensionError("snapshot does not match model parameters");
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto dst = params[k].value.mutable_data();
        if (dst.size() != snapshot.values[k].size()) throw DimensionError("snapshot shape mismatch for " + params[k].name);
        std::copy(snapshot.values[k].begin(), snapshot.values[k].end(), dst.begin());
    }
    auto bns = batch_norms();
    if (snapshot.running.size() != 2 * bns.size()) throw DimensionError("snapshot batch-norm state mismatch");
    for (std::size_t k = 0; k < bns.size(); ++k) {
        bns[k]->running_mean = snapshot.running[2 * k];
        bns[k]->running_var = snapshot.running[2 * k + 1];
    }
}

std::string HybridModel::metadata_json() const {
    nlohmann::json j;
    j["variant"] = to_string(spec_.variant);
    j["features"] = spec_.features;
    j["classes"] = spec_.classes;
    j["graph_layers"] = spec_.graph_layers;
    j["graph_dims"] = graph_layer_dims(spec_.features, spec_.classes, spec_.graph_layers);
    j["aggregator"] = to_string(spec_.sage.aggregator);
    j["normalization"] = to_string(spec_.sage.normalization);
    j["convolutional_variant"] = spec_.sage.convolutional_variant;
    j["attention_heads"] = spec_.attention_heads;
    j["seed"] = spec_.seed;
    j["parameter_count"] = parameter_count();
    nlohmann::json shapes = nlohmann::json::object();
    for (const auto& p : parameters()) shapes[p.name] = p.value.shape();
    j["shapes"] = shapes;
    j["batch_norm_running"] = nlohmann::json::array();
    for (const auto* bn : batch_norms()) j["batch_norm_running"].push_back({{"mean", bn->running_mean}, {"var", bn->running_var}});
    return j.dump();
}

}  // namespace sagechain
