#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sagechain/baselines.hpp"
#include "sagechain/dataset.hpp"
#include "sagechain/graph.hpp"
#include "sagechain/graph_context.hpp"
#include "sagechain/model.hpp"
#include "sagechain/report.hpp"
#include "sagechain/schema.hpp"

namespace sagechain {

enum class Combiner { MeanLogProb, GraphOnly };

std::string to_string(Combiner c);
Combiner parse_combiner(std::string_view text);

struct TrainConfig {
    DatasetId dataset = DatasetId::SmartLogistics;
    std::string task = "traffic_status";
    Variant variant = Variant::HGSN;
    int epochs = 400;
    std::size_t window_size = 20;
    double threshold = 0.5;
    double leak_alpha = 0.1;
    double lr_graph = 0.001;
    double lr_seq = 0.0001;
    double weight_decay = 4e-4;
    std::array<double, 3> loss_weights{1.0, 1.0, 1.0};
    std::size_t k_folds = 10;
    std::uint64_t seed = 17;
    std::size_t graph_layers = 4;
    Aggregator aggregator = Aggregator::Mean;
    NodeNormalization normalization = NodeNormalization::BatchNorm;
    bool convolutional_variant = false;
    std::size_t attention_heads = 1;
    // Zero means the feature count.
    std::size_t lstm_hidden = 0;
    // Gradient L2 clip per step; zero disables.
    double grad_clip = 0.0;
    Combiner combiner = Combiner::MeanLogProb;
    // Share of training windows held out for model selection.
    double val_fraction = 0.1;
    bool balance = true;
    std::size_t parallel_folds = 1;
    bool export_embeddings = false;

    // Throws ConfigError on out-of-range values.
    void validate() const;
};

// Ordered key/value view; keys match set_config_value.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& config);
// Throws ConfigError for unknown keys or unparsable values.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);

// Balanced, unscaled rows for one task, in file order.
struct PreparedData {
    DatasetId dataset = DatasetId::SmartLogistics;
    std::string task;
    FeatureMatrix matrix;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::string source;

    int classes() const { return static_cast<int>(class_names.size()); }
};

PreparedData prepare_dataset(const RawTable& raw, std::string_view task, bool balance, std::uint64_t seed);
PreparedData load_prepared(const std::filesystem::path& path, DatasetId dataset, std::string_view task, bool balance,
                           std::uint64_t seed);

ModelSpec model_spec(const TrainConfig& config, std::size_t features, std::size_t classes);
// Model for the configured dataset and task with seeded Glorot init.
HybridModel build_model(const TrainConfig& config, const DatasetSchema& schema);

struct LossTerms {
    Tensor total;
    double graph = 0.0;
    double conv = 0.0;
    double lstm = 0.0;
};

// lambda_1 CE(graph) + lambda_2 CE(conv) + lambda_3 CE(lstm) over log-probabilities.
Tensor total_loss(std::span<const int> targets, const Tensor& out_graph, const Tensor& out_conv, const Tensor& out_lstm,
                  const std::array<double, 3>& weights);
// Same, tolerating absent sequence heads (non-hybrid variants).
LossTerms total_loss(std::span<const int> targets, const HeadOutputs& heads, const std::array<double, 3>& weights);

struct FoldSplit {
    std::vector<std::vector<std::size_t>> folds;
};

// Seeded shuffle of 0..n-1 then contiguous partition into k folds whose sizes
// differ by at most one.
FoldSplit kfold_split(std::size_t n_windows, std::size_t k, std::uint64_t seed);

// One window ready for the model.
struct WindowSample {
    std::size_t index = 0;
    GraphContext graph;
    std::vector<int> labels;
};

WindowSample make_window(const FeatureMatrix& scaled, std::span<const int> labels, const WindowRange& range,
                         std::size_t index, const GraphParams& params);

struct Prediction {
    std::vector<int> classes;
    Tensor log_probs;  // n x C, combined
    HeadOutputs heads;
};

Prediction predict(HybridModel& model, const GraphContext& graph, Combiner combiner = Combiner::MeanLogProb);
// Combined log-probabilities of the available heads.
Tensor combine_heads(const HeadOutputs& heads, Combiner combiner);
std::vector<int> argmax_rows(const Tensor& scores);

struct FoldOptions {
    int fold = 0;
    std::uint64_t seed = 17;
    // When set, a non-finite loss dumps the model and history here.
    std::optional<std::filesystem::path> failure_dir;
};

// Per-window Adam steps over shuffled windows; keeps the parameters of the
// epoch with the best validation accuracy (earliest on ties).
TrainHistory train_fold(HybridModel& model, std::span<const WindowSample> train, std::span<const WindowSample> val,
                        const TrainConfig& config, const FoldOptions& options);

struct ExperimentOptions {
    // Per-fold checkpoints under <dir>/fold_<i>/model.{bin,json}.
    std::optional<std::filesystem::path> checkpoint_dir;
    std::optional<std::filesystem::path> failure_dir;
};

ExperimentReport run_experiment(const TrainConfig& config, const PreparedData& data,
                                const ExperimentOptions& options = {});

// Loads `path` and runs the pipeline.
ExperimentReport run_experiment(const TrainConfig& config, const std::filesystem::path& path,
                                const ExperimentOptions& options = {});

// One full experiment per graph layer count.
std::vector<AblationRow> layer_ablation(const TrainConfig& base, const PreparedData& data,
                                        std::span<const std::size_t> layer_counts);

// Classical baselines over the same window folds and per-fold scaling.
struct BaselineAccuracy {
    double majority = 0.0;
    double knn = 0.0;
    double logistic = 0.0;
};

BaselineAccuracy run_baselines(const TrainConfig& config, const PreparedData& data, std::size_t knn_k = 5);

}  // namespace sagechain
