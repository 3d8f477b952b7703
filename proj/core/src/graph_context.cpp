#include "sagechain/graph_context.hpp"

namespace sagechain {

GraphContext GraphContext::from_neighbors(std::vector<std::vector<std::size_t>> neighbors) {
    GraphContext ctx;
    const std::size_t n = neighbors.size();
    ctx.n_nodes = n;
    std::vector<double> mean(n * n, 0.0);
    ctx.attention_mask.assign(n * n, 0);
    ctx.pool_sets.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        const double w = 1.0 / static_cast<double>(neighbors[v].size() + 1);
        mean[v * n + v] = w;
        ctx.attention_mask[v * n + v] = 1;
        for (std::size_t u : neighbors[v]) {
            mean[v * n + u] = w;
            ctx.attention_mask[v * n + u] = 1;
        }
        ctx.pool_sets[v] = neighbors[v].empty() ? std::vector<std::size_t>{v} : neighbors[v];
    }
    ctx.mean_matrix = Tensor::from({n, n}, std::move(mean));
    ctx.neighbors = std::move(neighbors);
    return ctx;
}

GraphContext GraphContext::from_graph(const SampleGraph& graph) {
    auto ctx = from_neighbors(graph.neighbors);
    ctx.features = Tensor::from({graph.n_nodes, graph.n_features}, graph.node_features);
    return ctx;
}

}  // namespace sagechain
