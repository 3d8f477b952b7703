#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sagechain/checkpoint.hpp"
#include "sagechain/geometric.hpp"
#include "sagechain/graph_context.hpp"
#include "sagechain/sequence.hpp"

namespace sagechain {

enum class Variant { HGSN, HGatN, GSN, GatN };

std::string to_string(Variant v);
Variant parse_variant(std::string_view text);
bool is_hybrid(Variant v);
bool uses_attention(Variant v);

inline constexpr const char* kGraphGroup = "graph";
inline constexpr const char* kSequenceGroup = "sequence";

struct ModelSpec {
    std::size_t features = 0;
    std::size_t classes = 0;
    Variant variant = Variant::HGSN;
    std::size_t graph_layers = 4;
    SageLayerOptions sage;
    std::size_t attention_heads = 1;
    // Empty means {features, classes}.
    std::vector<std::size_t> conv_kernels;
    // Zero means the feature count.
    std::size_t lstm_hidden = 0;
    std::size_t lstm_layers = kLstmBranchLayers;
    std::uint64_t seed = 17;
};

// Output widths of the graph stack: starts at the feature count, narrows
// linearly to min(features, classes) by the second-to-last layer and keeps
// that width for the last one. 8 features / 3 classes / 4 layers gives
// 8, 5, 3, 3.
std::vector<std::size_t> graph_layer_dims(std::size_t features, std::size_t classes, std::size_t layers);

// Per-head log-probabilities (n x classes) and the features each head reads.
// Sequence heads are undefined for non-hybrid variants.
struct HeadOutputs {
    Tensor graph;
    Tensor conv;
    Tensor lstm;
    Tensor graph_features;
    Tensor conv_features;
    Tensor lstm_features;
};

// Graph stack (GraphSAGE or attention) with a linear log-softmax head, plus the
// convolution and LSTM branches for hybrid variants.
class HybridModel {
public:
    static HybridModel build(const ModelSpec& spec);

    HeadOutputs forward(const GraphContext& graph, bool training);

    const ModelSpec& spec() const noexcept { return spec_; }
    ParameterList parameters() const;
    std::vector<Tensor> group_parameters(const std::string& group) const;
    std::size_t parameter_count() const;
    // FNV-1a over the raw parameter bytes.
    std::uint64_t checksum() const;

    // Parameter values plus batch-norm running statistics.
    struct Snapshot {
        std::vector<std::vector<double>> values;
        std::vector<std::vector<double>> running;
    };
    Snapshot snapshot() const;
    void restore(const Snapshot& snapshot);

    // Model description embedded in checkpoint manifests.
    std::string metadata_json() const;

    const std::vector<SageLayer>& sage_layers() const noexcept { return sage_; }
    const std::vector<GatLayer>& attention_layers() const noexcept { return gat_; }
    const std::optional<ConvBranch>& conv_branch() const noexcept { return conv_; }
    const std::optional<LstmBranch>& lstm_branch() const noexcept { return lstm_; }

private:
    std::vector<BatchNorm*> batch_norms();
    std::vector<const BatchNorm*> batch_norms() const;

    ModelSpec spec_;
    std::vector<SageLayer> sage_;
    std::vector<GatLayer> gat_;
    Tensor head_weight_;
    Tensor head_bias_;
    std::optional<ConvBranch> conv_;
    std::optional<LstmBranch> lstm_;
};

}  // namespace sagechain
