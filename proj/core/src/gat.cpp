#include "sagechain/adam.hpp"
#include "sagechain/error.hpp"
#include "sagechain/geometric.hpp"
#include "sagechain/ops.hpp"

namespace sagechain {

GatLayer GatLayer::create(std::size_t in_dim, std::size_t out_dim, std::size_t heads, HeadMode mode,
                          NodeNormalization normalization, std::mt19937_64& rng) {
    if (heads == 0) throw ConfigError("attention layer needs at least one head");
    GatLayer l;
    l.in_dim = in_dim;
    l.out_dim = out_dim;
    l.mode = mode;
    l.normalization = normalization;
    for (std::size_t k = 0; k < heads; ++k) {
        l.weight.push_back(glorot_uniform({out_dim, in_dim}, in_dim, out_dim, rng));
        l.attn_src.push_back(glorot_uniform({out_dim, 1}, 2 * out_dim, 1, rng));
        l.attn_dst.push_back(glorot_uniform({out_dim, 1}, 2 * out_dim, 1, rng));
    }
    if (normalization == NodeNormalization::BatchNorm) l.norm = BatchNorm::create(l.output_dim());
    return l;
}

namespace {

struct HeadTerms {
    Tensor projected;     // W f, n x out
    Tensor coefficients;  // sa, n x n
};

HeadTerms head_terms(const GatLayer& layer, const GraphContext& graph, const Tensor& h, std::size_t head) {
    if (h.rank() != 2 || h.shape()[0] != graph.n_nodes || h.shape()[1] != layer.in_dim) {
        throw DimensionError("attention layer expects node matrix [" + std::to_string(graph.n_nodes) + ", " +
                             std::to_string(layer.in_dim) + "], got " + shape_to_string(h.shape()));
    }
    Tensor wh = ops::linear(h, layer.weight[head]);
    // e(m, n) = leaky(w_src . Wf_m + w_dst . Wf_n)
    Tensor src = ops::matmul(wh, layer.attn_src[head]);
    Tensor dst = ops::transpose(ops::matmul(wh, layer.attn_dst[head]));
    Tensor scores = ops::leaky_relu(ops::outer_sum(src, dst), layer.leaky_slope);
    return {wh, ops::masked_softmax_rows(scores, graph.attention_mask)};
}

}  // namespace

Tensor GatLayer::attention(const GraphContext& graph, const Tensor& h, std::size_t head) const {
    return head_terms(*this, graph, h, head).coefficients;
}

Tensor GatLayer::attend(const GraphContext& graph, const Tensor& h) const {
    std::vector<Tensor> outputs;
    for (std::size_t k = 0; k < heads(); ++k) {
        auto terms = head_terms(*this, graph, h, k);
        outputs.push_back(ops::matmul(terms.coefficients, terms.projected));
    }
    if (mode == HeadMode::Concat) {
        Tensor out = ops::relu(outputs[0]);
        for (std::size_t k = 1; k < outputs.size(); ++k) out = ops::concat_cols(out, ops::relu(outputs[k]));
        return out;
    }
    Tensor total = outputs[0];
    for (std::size_t k = 1; k < outputs.size(); ++k) total = ops::add(total, outputs[k]);
    return ops::relu(ops::scale(total, 1.0 / static_cast<double>(outputs.size())));
}

Tensor GatLayer::forward(const GraphContext& graph, const Tensor& h, bool training) {
    Tensor out = attend(graph, h);
    switch (normalization) {
        case NodeNormalization::BatchNorm: return norm.forward(out, training);
        case NodeNormalization::L2: return ops::l2_normalize_rows(out);
        case NodeNormalization::None: return out;
    }
    return out;
}

void GatLayer::collect(ParameterList& out, const std::string& prefix, const std::string& group) const {
    for (std::size_t k = 0; k < heads(); ++k) {
        const auto p = prefix + ".head" + std::to_string(k);
        out.push_back({p + ".weight", group, weight[k]});
        out.push_back({p + ".attn_src", group, attn_src[k]});
        out.push_back({p + ".attn_dst", group, attn_dst[k]});
    }
    if (normalization == NodeNormalization::BatchNorm) norm.collect(out, prefix + ".bn", group);
}

}  // namespace sagechain
