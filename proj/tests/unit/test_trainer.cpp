#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "sagechain/error.hpp"
#include "sagechain/ops.hpp"
#include "sagechain/synth.hpp"
#include "sagechain/trainer.hpp"

using namespace sagechain;
using sagechain::testing::random_tensor;

namespace {

Tensor random_log_probs(std::size_t n, std::size_t c, std::mt19937_64& rng) {
    return ops::log_softmax_rows(random_tensor({n, c}, rng, -2, 2, true));
}

double ce(const Tensor& lp, const std::vector<int>& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s -= lp.at(i, static_cast<std::size_t>(t[i]));
    return s / static_cast<double>(t.size());
}

PreparedData prepared_from_csv(DatasetId id, const std::string& csv, const std::string& task, bool balance) {
    std::istringstream in(csv);
    return prepare_dataset(load_dataset(in, id), task, balance, 17);
}

// Two clusters of opposite sign in every feature; labels alternate within a
// window, so each window graph splits into two same-class cliques.
std::vector<WindowSample> separable_windows(std::size_t count, std::size_t nodes, std::uint64_t seed,
                                            std::size_t features = 6) {
    std::mt19937_64 rng(seed);
    FeatureMatrix m;
    m.cols = features;
    std::vector<int> labels;
    for (std::size_t w = 0; w < count; ++w)
        for (std::size_t v = 0; v < nodes; ++v) {
            const int label = static_cast<int>(v % 2);
            for (std::size_t f = 0; f < features; ++f) {
                const double sign = (label ? 1.0 : -1.0) * (f % 2 ? -1.0 : 1.0);
                m.values.push_back(sign * (1.0 + 0.5 * static_cast<double>(f)) + uniform_real(rng, -0.1, 0.1));
            }
            labels.push_back(label);
        }
    m.rows = labels.size();
    std::vector<WindowSample> out;
    for (std::size_t w = 0; w < count; ++w)
        out.push_back(make_window(m, labels, {w * nodes, (w + 1) * nodes}, w, GraphParams{0.5, 0.1}));
    return out;
}

double window_accuracy(HybridModel& model, const std::vector<WindowSample>& windows) {
    std::size_t hit = 0, total = 0;
    for (const auto& w : windows) {
        const auto p = predict(model, w.graph);
        for (std::size_t i = 0; i < w.labels.size(); ++i) hit += p.classes[i] == w.labels[i];
        total += w.labels.size();
    }
    return 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace

TEST(TotalLoss, PerfectHeadsGiveZero) {
    const std::vector<int> t{0, 1};
    auto perfect = Tensor::from({2, 2}, {0.0, -1e9, -1e9, 0.0});
    EXPECT_NEAR(total_loss(t, perfect, perfect, perfect, {1, 1, 1}).item(), 0.0, 1e-12);
}

TEST(TotalLoss, WeightsSelectAndSumHeads) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const std::vector<int> t{2, 0, 1, 1, 2};
        auto g = random_log_probs(5, 3, rng), c = random_log_probs(5, 3, rng), l = random_log_probs(5, 3, rng);
        EXPECT_NEAR(total_loss(t, g, c, l, {1, 0, 0}).item(), ce(g, t), 1e-12);
        EXPECT_NEAR(total_loss(t, g, c, l, {1, 1, 1}).item(), ce(g, t) + ce(c, t) + ce(l, t), 1e-12);
        EXPECT_NEAR(total_loss(t, g, c, l, {0.5, 2, 0}).item(), 0.5 * ce(g, t) + 2 * ce(c, t), 1e-12);
        HeadOutputs heads;
        heads.graph = g;
        const auto terms = total_loss(t, heads, {1, 1, 1});
        EXPECT_NEAR(terms.total.item(), ce(g, t), 1e-12);
        EXPECT_DOUBLE_EQ(terms.conv, 0.0);
    }
    const std::vector<int> t{0, 1};
    EXPECT_THROW(total_loss(t, Tensor::zeros({2, 2}), Tensor::zeros({3, 2}), Tensor::zeros({2, 2}), {1, 1, 1}),
                 DimensionError);
}

TEST(KFold, FiftyWindowsGiveTenFoldsOfFive) {
    const auto split = kfold_split(50, 10, 17);
    ASSERT_EQ(split.folds.size(), 10u);
    std::multiset<std::size_t> seen;
    for (const auto& f : split.folds) {
        EXPECT_EQ(f.size(), 5u);
        seen.insert(f.begin(), f.end());
    }
    EXPECT_EQ(seen.size(), 50u);
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(seen.count(i), 1u);
}

TEST(KFold, UnevenSizesDifferByAtMostOneAndSeedMatters) {
    const auto a = kfold_split(23, 4, 1), b = kfold_split(23, 4, 2);
    std::vector<std::size_t> sa, sb;
    for (const auto& f : a.folds) sa.push_back(f.size());
    for (const auto& f : b.folds) sb.push_back(f.size());
    EXPECT_EQ(sa, (std::vector<std::size_t>{6, 6, 6, 5}));
    EXPECT_EQ(sa, sb);
    EXPECT_NE(a.folds, b.folds);
    EXPECT_THROW(kfold_split(3, 4, 1), ConfigError);
    EXPECT_THROW(kfold_split(10, 1, 1), ConfigError);
}

TEST(Combine, IdenticalHeadsEqualAnySingleHead) {
    std::mt19937_64 rng(3);
    HeadOutputs h;
    h.graph = random_log_probs(4, 3, rng);
    h.conv = h.graph;
    h.lstm = h.graph;
    auto c = combine_heads(h, Combiner::MeanLogProb);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], h.graph[i], 1e-15);
}

TEST(Combine, MeanMatchesManualAverageAndGraphOnlyIgnoresSequenceHeads) {
    std::mt19937_64 rng(4);
    HeadOutputs h;
    h.graph = random_log_probs(4, 3, rng);
    h.conv = random_log_probs(4, 3, rng);
    h.lstm = random_log_probs(4, 3, rng);
    auto c = combine_heads(h, Combiner::MeanLogProb);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_DOUBLE_EQ(c[i], (h.graph[i] + h.conv[i] + h.lstm[i]) / 3.0);
    auto g = combine_heads(h, Combiner::GraphOnly);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], h.graph[i]);
}

TEST(Combine, ArgmaxIsShiftInvariant) {
    std::mt19937_64 rng(5);
    auto s = random_tensor({6, 4}, rng);
    EXPECT_EQ(argmax_rows(s), argmax_rows(ops::add_scalar(s, 7.5)));
    EXPECT_EQ(argmax_rows(Tensor::from({1, 3}, {1.0, 1.0, 0.0})), std::vector<int>{0});
}

TEST(Config, SetValueParsesEveryKnownKey) {
    TrainConfig c;
    set_config_value(c, "variant", "gatn");
    set_config_value(c, "epochs", "12");
    set_config_value(c, "window-size", "25");
    set_config_value(c, "loss_weights", "1, 0.5, 0.25");
    set_config_value(c, "normalization", "l2");
    set_config_value(c, "aggregator", "pool");
    set_config_value(c, "balance", "false");
    set_config_value(c, "combiner", "graph-only");
    EXPECT_EQ(c.variant, Variant::GatN);
    EXPECT_EQ(c.epochs, 12);
    EXPECT_EQ(c.window_size, 25u);
    EXPECT_EQ(c.loss_weights, (std::array<double, 3>{1.0, 0.5, 0.25}));
    EXPECT_EQ(c.normalization, NodeNormalization::L2);
    EXPECT_EQ(c.aggregator, Aggregator::Pool);
    EXPECT_FALSE(c.balance);
    EXPECT_EQ(c.combiner, Combiner::GraphOnly);
    EXPECT_THROW(set_config_value(c, "learning_rate", "1"), ConfigError);
    EXPECT_THROW(set_config_value(c, "epochs", "many"), ConfigError);
}

TEST(Config, EntriesRoundTripThroughSetValue) {
    TrainConfig a;
    a.variant = Variant::HGatN;
    a.epochs = 9;
    a.threshold = 0.35;
    a.seed = 99;
    TrainConfig b;
    for (const auto& [k, v] : config_entries(a)) set_config_value(b, k, v);
    EXPECT_EQ(config_entries(a), config_entries(b));
}

TEST(Config, ValidateRejectsOutOfRangeValues) {
    TrainConfig c;
    c.validate();
    auto bad = c;
    bad.window_size = 4;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.threshold = 1.5;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.task = "warehouse";
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Trainer, ZeroLearningRateFreezesParameters) {
    TrainConfig c;
    c.variant = Variant::HGSN;
    c.epochs = 3;
    c.lr_graph = 0.0;
    c.lr_seq = 0.0;
    c.weight_decay = 0.0;
    ModelSpec spec;
    spec.features = 6;
    spec.classes = 2;
    auto model = HybridModel::build(spec);
    const auto before = model.checksum();
    const auto windows = separable_windows(3, 20, 1);
    const auto h = train_fold(model, windows, {}, c, {});
    EXPECT_EQ(model.checksum(), before);
    ASSERT_EQ(h.epochs.size(), 3u);
    EXPECT_EQ(h.epochs[0].total_loss, h.epochs[2].total_loss);
}

TEST(Trainer, SeparableWindowsReachFullTrainAccuracyWithinFiftyEpochs) {
    TrainConfig c;
    c.variant = Variant::GSN;
    c.epochs = 50;
    auto model = HybridModel::build(model_spec(c, 6, 2));
    const auto windows = separable_windows(8, 6, 2);
    const auto h = train_fold(model, windows, {}, c, {});
    EXPECT_DOUBLE_EQ(window_accuracy(model, windows), 100.0);
    EXPECT_DOUBLE_EQ(h.best_val_acc, 100.0);
}

TEST(Trainer, LossDecreasesOnLogisticsFixture) {
    auto data = prepared_from_csv(DatasetId::SmartLogistics, synth_csv(DatasetId::SmartLogistics, 200, 17),
                                  "traffic_status", true);
    TrainConfig c;
    c.epochs = 40;
    c.k_folds = 2;
    const auto report = run_experiment(c, data);
    ASSERT_EQ(report.folds.size(), 2u);
    for (const auto& f : report.folds) {
        ASSERT_EQ(f.history.epochs.size(), 40u);
        EXPECT_LT(f.history.epochs.back().total_loss, f.history.epochs.front().total_loss);
    }
}

TEST(Trainer, NonFiniteLossAbortsWithDump) {
    const auto dir = std::filesystem::temp_directory_path() / "sagechain_nan_dump";
    std::filesystem::remove_all(dir);
    TrainConfig c;
    c.epochs = 2;
    ModelSpec spec;
    spec.features = 6;
    spec.classes = 2;
    auto model = HybridModel::build(spec);
    auto windows = separable_windows(2, 20, 3);
    windows[1].graph.features.mutable_data()[4] = std::nan("");
    FoldOptions opts;
    opts.fold = 3;
    opts.failure_dir = dir;
    try {
        train_fold(model, windows, {}, c, opts);
        FAIL() << "expected TrainingAborted";
    } catch (const TrainingAborted& e) {
        EXPECT_EQ(e.fold(), 3);
        EXPECT_EQ(e.epoch(), 1);
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "fold_3.json"));
}

TEST(Trainer, ExperimentIsDeterministicAndStructurallyComplete) {
    auto data = prepared_from_csv(DatasetId::SmartLogistics, synth_csv(DatasetId::SmartLogistics, 300, 5),
                                  "traffic_status", true);
    TrainConfig c;
    c.epochs = 4;
    c.k_folds = 3;
    const auto a = run_experiment(c, data);
    const auto b = run_experiment(c, data);
    EXPECT_EQ(a.folds.size(), 3u);
    EXPECT_EQ(a.aggregate, b.aggregate);
    EXPECT_EQ(a.aggregate_confusion, b.aggregate_confusion);
    std::uint64_t total = 0;
    for (const auto& f : a.folds) total += f.confusion.total();
    EXPECT_EQ(a.aggregate_confusion.total(), total);
    auto parallel = c;
    parallel.parallel_folds = 3;
    EXPECT_EQ(run_experiment(parallel, data).aggregate, a.aggregate);
}

TEST(Trainer, PrepareDatasetBalancesAndDropsActiveColumn) {
    auto data = prepared_from_csv(DatasetId::SmartLogistics, synth_csv(DatasetId::SmartLogistics, 300, 5),
                                  "shipment_status", true);
    EXPECT_EQ(data.matrix.cols, 9u);
    EXPECT_EQ(data.classes(), 3);
    const auto counts = class_counts(data.labels, 3);
    EXPECT_EQ(counts[0], counts[1]);
    EXPECT_EQ(counts[1], counts[2]);
}
