#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sagechain/metrics.hpp"

namespace sagechain {

struct EpochRecord {
    int epoch = 0;  // 1-based
    double total_loss = 0.0;
    double graph_loss = 0.0;
    double conv_loss = 0.0;
    double lstm_loss = 0.0;
    double train_acc = 0.0;  // percent
    double val_acc = 0.0;    // percent
    double seconds = 0.0;    // wall clock, kept out of report.json
    bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_val_acc = 0.0;
    bool operator==(const TrainHistory&) const = default;

    double mean_epoch_seconds() const;
};

struct FoldResult {
    int fold = 0;
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
    std::vector<std::size_t> test_windows;
    ConfusionMatrix confusion;
    MetricsRow metrics;
    TrainHistory history;
    bool operator==(const FoldResult&) const = default;
};

// Per-node values of one layer for the test windows, for external T-SNE.
struct EmbeddingTable {
    std::string layer;
    std::size_t dims = 0;
    struct Row {
        int fold = 0;
        std::size_t window = 0;
        std::size_t node = 0;
        int label = 0;
        int predicted = 0;
        std::vector<double> values;
        bool operator==(const Row&) const = default;
    };
    std::vector<Row> rows;
    bool operator==(const EmbeddingTable&) const = default;
};

struct ExperimentReport {
    // Effective configuration as ordered key/value text.
    std::vector<std::pair<std::string, std::string>> config;
    std::string dataset;
    std::string task;
    std::string variant;
    std::string data_source;
    std::vector<std::string> class_names;
    std::size_t rows = 0;
    std::size_t windows = 0;
    std::vector<FoldResult> folds;
    ConfusionMatrix aggregate_confusion;
    MetricsRow aggregate;
    std::vector<EmbeddingTable> embeddings;
    bool operator==(const ExperimentReport&) const = default;

    int classes() const { return static_cast<int>(class_names.size()); }
    // Recomputes the aggregate confusion and metrics from the folds.
    void finalize();
    double mean_epoch_seconds() const;
};

// report.json text. Wall-clock seconds are omitted so equal runs give equal bytes.
std::string report_to_json(const ExperimentReport& report);
// Throws SchemaError on malformed input. Epoch seconds come back as zero.
ExperimentReport report_from_json(std::string_view text);

// Writes report.json, metrics.csv, confusion_<task>.csv, history_fold<i>.csv,
// timing.json and embeddings_<layer>.csv (when present). Every file is staged
// before any is moved into place; a report without folds is rejected before
// touching the directory.
void render_report(const ExperimentReport& report, const std::filesystem::path& out_dir);

// Aligned text grid with a `true\pred` corner.
std::string format_confusion(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);
// Per-fold and aggregate metrics plus the aggregate confusion grid.
std::string format_summary(const ExperimentReport& report);

// Shortest decimal with at most 6 significant digits.
std::string format_sig6(double value);
// One decimal, for percentages.
std::string format_percent(double value);

std::string history_csv(const TrainHistory& history);
std::string metrics_csv(const ExperimentReport& report);
std::string confusion_csv(const ConfusionMatrix& cm);

struct AblationRow {
    std::size_t layers = 0;
    double accuracy = 0.0;
    double seconds_per_epoch = 0.0;
};

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace sagechain
