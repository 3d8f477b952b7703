#pragma once

#include <vector>

#include "sagechain/graph.hpp"
#include "sagechain/tensor.hpp"

namespace sagechain {

// Per-graph structures the geometric layers consume, derived once from a
// SampleGraph and reused across epochs.
struct GraphContext {
    std::size_t n_nodes = 0;
    std::vector<std::vector<std::size_t>> neighbors;  // NF(v)
    // Row v averages {v} and NF(v) with equal weight.
    Tensor mean_matrix;
    // NF(v), or {v} when NF(v) is empty.
    std::vector<std::vector<std::size_t>> pool_sets;
    // Attention support {v} and NF(v), as an n x n 0/1 mask.
    std::vector<unsigned char> attention_mask;
    // Window node features as an n x F constant.
    Tensor features;

    static GraphContext from_graph(const SampleGraph& graph);
    // Context over given neighbor lists (features left undefined).
    static GraphContext from_neighbors(std::vector<std::vector<std::size_t>> neighbors);
};

}  // namespace sagechain
