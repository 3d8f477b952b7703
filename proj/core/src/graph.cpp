#include "sagechain/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sagechain/error.hpp"

namespace sagechain {

std::size_t AdjacencyMatrix::edge_count() const {
    std::size_t e = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (at(i, j) != 0.0) ++e;
    return e;
}

CorrelationMatrix correlation_matrix(std::span<const double> features, std::size_t rows, std::size_t cols) {
    if (rows < 2 || cols < 2) throw DimensionError("correlation_matrix: need at least 2 rows and 2 features");
    if (features.size() != rows * cols) throw DimensionError("correlation_matrix: feature buffer size mismatch");

    std::vector<double> centered(features.begin(), features.end());
    std::vector<double> norm(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < cols; ++c) mean += features[r * cols + c];
        mean /= static_cast<double>(cols);
        double ss = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            double& v = centered[r * cols + c];
            v -= mean;
            ss += v * v;
        }
        norm[r] = std::sqrt(ss);
    }

    CorrelationMatrix corr;
    corr.n = rows;
    corr.values.assign(rows * rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        corr.at(i, i) = 1.0;
        if (norm[i] <= 1e-300) continue;
        for (std::size_t j = i + 1; j < rows; ++j) {
            if (norm[j] <= 1e-300) continue;
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += centered[i * cols + c] * centered[j * cols + c];
            const double r = std::clamp(dot / (norm[i] * norm[j]), -1.0, 1.0);
            corr.at(i, j) = r;
            corr.at(j, i) = r;
        }
    }
    return corr;
}

AdjacencyMatrix rectify_and_threshold(const CorrelationMatrix& corr, double threshold, double leak_alpha) {
    if (!(threshold >= 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in [0, 1)");
    if (!(leak_alpha >= 0.0 && leak_alpha < 1.0)) throw std::invalid_argument("leak_alpha must lie in [0, 1)");
    AdjacencyMatrix adj;
    adj.n = corr.n;
    adj.threshold = threshold;
    adj.values.assign(corr.values.size(), 0.0);
    for (std::size_t i = 0; i < corr.n; ++i)
        for (std::size_t j = 0; j < corr.n; ++j) {
            if (i == j) {
                adj.at(i, j) = 1.0;
                continue;
            }
            const double x = corr.at(i, j);
            const double a = std::abs(x >= 0.0 ? x : leak_alpha * x);
            adj.at(i, j) = a > threshold ? a : 0.0;
        }
    return adj;
}

SampleGraph build_graph(std::span<const double> features, std::size_t rows, std::size_t cols,
                        std::span<const int> labels, const GraphParams& params) {
    if (labels.size() != rows) throw DimensionError("build_graph: label count differs from node count");
    SampleGraph g;
    g.n_nodes = rows;
    g.n_features = cols;
    g.node_features.assign(features.begin(), features.end());
    g.adjacency = rectify_and_threshold(correlation_matrix(features, rows, cols), params.threshold, params.leak_alpha);
    g.neighbors.resize(rows);
    for (std::size_t v = 0; v < rows; ++v)
        for (std::size_t u = 0; u < rows; ++u)
            if (u != v && g.adjacency.at(v, u) != 0.0) g.neighbors[v].push_back(u);
    g.labels.assign(labels.begin(), labels.end());
    return g;
}

void write_graph_dump(const std::filesystem::path& dir, const std::vector<SampleGraph>& graphs) {
    std::filesystem::create_directories(dir);
    nlohmann::json index = nlohmann::json::array();
    for (std::size_t k = 0; k < graphs.size(); ++k) {
        const auto& g = graphs[k];
        const auto name = "graph_" + std::to_string(k) + ".csv";
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        out << "src,dst,weight\n";
        out.precision(17);
        for (std::size_t i = 0; i < g.n_nodes; ++i)
            for (std::size_t j = 0; j < g.n_nodes; ++j)
                if (g.adjacency.at(i, j) != 0.0) out << i << ',' << j << ',' << g.adjacency.at(i, j) << '\n';
        index.push_back({{"file", name},
                         {"nodes", g.n_nodes},
                         {"features", g.n_features},
                         {"threshold", g.adjacency.threshold},
                         {"edges", g.adjacency.edge_count()}});
    }
    std::ofstream idx(dir / "index.json");
    idx << index.dump(2) << '\n';
}

}  // namespace sagechain
