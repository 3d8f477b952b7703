#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sagechain {

// counts[t][p]: rows are the true class, columns the prediction.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<std::uint64_t> counts;

    static ConfusionMatrix zeros(int classes);
    std::uint64_t at(int truth, int predicted) const { return counts[static_cast<std::size_t>(truth * classes + predicted)]; }
    std::uint64_t& at(int truth, int predicted) { return counts[static_cast<std::size_t>(truth * classes + predicted)]; }
    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_sum(int truth) const;
    std::uint64_t col_sum(int predicted) const;

    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, int classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
    // Set when the denominator was zero and the value was scored as 0.
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool operator==(const ClassMetrics&) const = default;
};

// Percentages in [0, 100]; precision/recall/f1 are unweighted class means.
struct MetricsRow {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<ClassMetrics> per_class;
    bool operator==(const MetricsRow&) const = default;

    bool any_undefined() const;
};

MetricsRow metrics_from_confusion(const ConfusionMatrix& cm);

}  // namespace sagechain
