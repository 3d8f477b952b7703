#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace sagechain {

// Dense n x n matrix, row-major.
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

// Pairwise Pearson correlation between node feature rows.
using CorrelationMatrix = SquareMatrix;

struct AdjacencyMatrix : SquareMatrix {
    double threshold = 0.0;

    // Undirected off-diagonal edges.
    std::size_t edge_count() const;
};

// One window as a graph: nodes are the window's transactions.
struct SampleGraph {
    std::size_t n_nodes = 0;
    std::size_t n_features = 0;
    std::vector<double> node_features;  // n_nodes x n_features
    AdjacencyMatrix adjacency;
    // NF(v): sorted neighbors, never containing v itself.
    std::vector<std::vector<std::size_t>> neighbors;
    std::vector<int> labels;
};

struct GraphParams {
    double threshold = 0.5;
    double leak_alpha = 0.1;
};

// features: rows x cols, row-major. A zero-variance row correlates 0 with all
// others and 1 with itself.
CorrelationMatrix correlation_matrix(std::span<const double> features, std::size_t rows, std::size_t cols);

// a_ij = |leaky_relu(corr_ij)|, kept only when > threshold; unit diagonal.
AdjacencyMatrix rectify_and_threshold(const CorrelationMatrix& corr, double threshold, double leak_alpha);

SampleGraph build_graph(std::span<const double> features, std::size_t rows, std::size_t cols,
                        std::span<const int> labels, const GraphParams& params);

// Writes graph_<i>.csv (src,dst,weight for every nonzero entry) per graph plus
// index.json describing node counts, thresholds and edge counts.
void write_graph_dump(const std::filesystem::path& dir, const std::vector<SampleGraph>& graphs);

}  // namespace sagechain
