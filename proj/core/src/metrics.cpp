#include "sagechain/metrics.hpp"

#include <stdexcept>
#include <string>

#include "sagechain/error.hpp"

namespace sagechain {

ConfusionMatrix ConfusionMatrix::zeros(int classes) {
    if (classes < 1) throw DimensionError("confusion matrix needs at least one class");
    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts.assign(static_cast<std::size_t>(classes * classes), 0);
    return cm;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t n = 0;
    for (int k = 0; k < classes; ++k) n += at(k, k);
    return n;
}

std::uint64_t ConfusionMatrix::row_sum(int truth) const {
    std::uint64_t n = 0;
    for (int p = 0; p < classes; ++p) n += at(truth, p);
    return n;
}

std::uint64_t ConfusionMatrix::col_sum(int predicted) const {
    std::uint64_t n = 0;
    for (int t = 0; t < classes; ++t) n += at(t, predicted);
    return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.classes != classes) throw DimensionError("cannot add confusion matrices of different class counts");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    return *this;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, int classes) {
    if (predictions.size() != labels.size()) {
        throw DimensionError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                             std::to_string(labels.size()) + " labels");
    }
    auto cm = ConfusionMatrix::zeros(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int t = labels[i], p = predictions[i];
        if (t < 0 || t >= classes || p < 0 || p >= classes) {
            throw std::out_of_range("confusion: pair (" + std::to_string(t) + ", " + std::to_string(p) +
                                    ") outside [0, " + std::to_string(classes) + ")");
        }
        ++cm.at(t, p);
    }
    return cm;
}

bool MetricsRow::any_undefined() const {
    for (const auto& c : per_class)
        if (c.precision_undefined || c.recall_undefined) return true;
    return false;
}

MetricsRow metrics_from_confusion(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw std::invalid_argument("metrics need at least one evaluated sample");
    MetricsRow row;
    row.accuracy = 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);
    for (int k = 0; k < cm.classes; ++k) {
        ClassMetrics c;
        const auto tp = static_cast<double>(cm.at(k, k));
        const auto predicted = cm.col_sum(k);
        c.support = cm.row_sum(k);
        if (predicted == 0) c.precision_undefined = true;
        else c.precision = 100.0 * tp / static_cast<double>(predicted);
        if (c.support == 0) c.recall_undefined = true;
        else c.recall = 100.0 * tp / static_cast<double>(c.support);
        if (c.precision + c.recall > 0.0) c.f1 = 2.0 * c.precision * c.recall / (c.precision + c.recall);
        row.precision += c.precision;
        row.recall += c.recall;
        row.f1 += c.f1;
        row.per_class.push_back(c);
    }
    const double n = static_cast<double>(cm.classes);
    row.precision /= n;
    row.recall /= n;
    row.f1 /= n;
    return row;
}

}  // namespace sagechain
