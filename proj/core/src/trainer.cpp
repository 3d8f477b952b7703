#include "sagechain/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sagechain/adam.hpp"
#include "sagechain/checkpoint.hpp"
#include "sagechain/error.hpp"
#include "sagechain/log.hpp"
#include "sagechain/ops.hpp"

namespace sagechain {

namespace {

std::string format_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

double parse_double(std::string_view key, std::string_view text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(std::string(text), &used);
        if (used != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config '" + std::string(key) + "': '" + std::string(text) + "' is not a number");
    }
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string_view::npos) {
        throw ConfigError("config '" + std::string(key) + "': '" + std::string(text) + "' is not a non-negative integer");
    }
    try {
        return std::stoull(std::string(text));
    } catch (const std::exception&) {
        throw ConfigError("config '" + std::string(key) + "': '" + std::string(text) + "' is out of range");
    }
}

bool parse_bool(std::string_view key, std::string_view text) {
    const auto k = normalize_key(text);
    if (k == "true" || k == "1" || k == "yes" || k == "on") return true;
    if (k == "false" || k == "0" || k == "no" || k == "off") return false;
    throw ConfigError("config '" + std::string(key) + "': '" + std::string(text) + "' is not a boolean");
}

// Distinct stream per fold so folds do not share initializations or orders.
std::uint64_t fold_seed(std::uint64_t seed, int fold) {
    return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(fold + 1) * 0xBF58476D1CE4E5B9ULL;
}

std::size_t count_correct(std::span<const int> predicted, std::span<const int> labels) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) n += predicted[i] == labels[i];
    return n;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

struct FoldData {
    std::vector<std::size_t> fit_windows;
    std::vector<std::size_t> val_windows;
    std::vector<std::size_t> test_windows;
    FeatureMatrix scaled;
};

FoldData prepare_fold(const TrainConfig& config, const PreparedData& data, const WindowSet& windows,
                      const FoldSplit& split, int fold) {
    FoldData fd;
    fd.test_windows = split.folds[static_cast<std::size_t>(fold)];
    std::vector<std::size_t> train;
    for (std::size_t f = 0; f < split.folds.size(); ++f)
        if (static_cast<int>(f) != fold) train.insert(train.end(), split.folds[f].begin(), split.folds[f].end());
    std::sort(train.begin(), train.end());
    std::sort(fd.test_windows.begin(), fd.test_windows.end());

    std::size_t n_val = 0;
    if (config.val_fraction > 0.0 && train.size() >= 2) {
        n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(train.size())));
        n_val = std::clamp<std::size_t>(n_val, 1, train.size() - 1);
    }
    auto shuffled = train;
    seeded_shuffle(shuffled, fold_seed(config.seed, fold) ^ 0x5A5A5A5A5A5A5A5AULL);
    fd.val_windows.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
    fd.fit_windows.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
    std::sort(fd.val_windows.begin(), fd.val_windows.end());
    std::sort(fd.fit_windows.begin(), fd.fit_windows.end());

    std::vector<std::size_t> rows;
    for (std::size_t w : fd.fit_windows)
        for (std::size_t r = windows.windows[w].begin; r < windows.windows[w].end; ++r) rows.push_back(r);
    fd.scaled = apply_scaler(data.matrix, fit_scaler(data.matrix, rows));
    return fd;
}

std::vector<WindowSample> make_windows(const FoldData& fd, const std::vector<std::size_t>& which,
                                       const PreparedData& data, const WindowSet& windows, const GraphParams& params) {
    std::vector<WindowSample> out;
    out.reserve(which.size());
    for (std::size_t w : which) out.push_back(make_window(fd.scaled, data.labels, windows.windows[w], w, params));
    return out;
}

}  // namespace

std::string to_string(Combiner c) { return c == Combiner::GraphOnly ? "graph-only" : "mean-log-prob"; }

Combiner parse_combiner(std::string_view text) {
    const auto k = normalize_key(text);
    if (k == "meanlogprob" || k == "mean") return Combiner::MeanLogProb;
    if (k == "graphonly" || k == "graph") return Combiner::GraphOnly;
    throw ConfigError("unknown combiner '" + std::string(text) + "' (expected mean-log-prob or graph-only)");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (window_size < 5) throw ConfigError("window must be at least 5 rows (convolution width)");
    if (!(threshold >= 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in [0, 1)");
    if (!(leak_alpha >= 0.0 && leak_alpha < 1.0)) throw ConfigError("leak_alpha must lie in [0, 1)");
    if (lr_graph < 0.0 || lr_seq < 0.0) throw ConfigError("learning rates must be non-negative");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    for (double w : loss_weights)
        if (w < 0.0) throw ConfigError("loss weights must be non-negative");
    if (k_folds < 2) throw ConfigError("k_folds must be at least 2");
    if (graph_layers < 1) throw ConfigError("layers must be at least 1");
    if (attention_heads < 1) throw ConfigError("attention_heads must be at least 1");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in [0, 1)");
    if (parallel_folds < 1) throw ConfigError("parallel_folds must be at least 1");
    if (grad_clip < 0.0) throw ConfigError("grad_clip must be non-negative");
    if (!builtin_schema(dataset).has_task(task)) {
        std::string tasks;
        for (const auto& t : builtin_schema(dataset).task_ids()) tasks += (tasks.empty() ? "" : ", ") + t;
        throw ConfigError("dataset " + to_string(dataset) + " has no task '" + task + "' (tasks: " + tasks + ")");
    }
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& c) {
    return {
        {"dataset", to_string(c.dataset)},
        {"task", c.task},
        {"variant", to_string(c.variant)},
        {"epochs", std::to_string(c.epochs)},
        {"window", std::to_string(c.window_size)},
        {"threshold", format_double(c.threshold)},
        {"leak_alpha", format_double(c.leak_alpha)},
        {"lr_graph", format_double(c.lr_graph)},
        {"lr_seq", format_double(c.lr_seq)},
        {"weight_decay", format_double(c.weight_decay)},
        {"loss_weights", format_double(c.loss_weights[0]) + "," + format_double(c.loss_weights[1]) + "," +
                             format_double(c.loss_weights[2])},
        {"k_folds", std::to_string(c.k_folds)},
        {"seed", std::to_string(c.seed)},
        {"layers", std::to_string(c.graph_layers)},
        {"aggregator", to_string(c.aggregator)},
        {"normalization", to_string(c.normalization)},
        {"convolutional_variant", c.convolutional_variant ? "true" : "false"},
        {"attention_heads", std::to_string(c.attention_heads)},
        {"lstm_hidden", std::to_string(c.lstm_hidden)},
        {"grad_clip", format_double(c.grad_clip)},
        {"combiner", to_string(c.combiner)},
        {"val_fraction", format_double(c.val_fraction)},
        {"balance", c.balance ? "true" : "false"},
        {"export_embeddings", c.export_embeddings ? "true" : "false"},
    };
}

void set_config_value(TrainConfig& c, std::string_view key_text, std::string_view value) {
    std::string key(key_text);
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "dataset") c.dataset = parse_dataset_id(value);
    else if (key == "task") c.task = std::string(value);
    else if (key == "variant") c.variant = parse_variant(value);
    else if (key == "epochs") c.epochs = static_cast<int>(parse_unsigned(key, value));
    else if (key == "window" || key == "window_size") c.window_size = parse_unsigned(key, value);
    else if (key == "threshold") c.threshold = parse_double(key, value);
    else if (key == "leak_alpha") c.leak_alpha = parse_double(key, value);
    else if (key == "lr_graph") c.lr_graph = parse_double(key, value);
    else if (key == "lr_seq") c.lr_seq = parse_double(key, value);
    else if (key == "weight_decay") c.weight_decay = parse_double(key, value);
    else if (key == "loss_weights") {
        std::array<double, 3> w{};
        std::size_t n = 0, start = 0;
        while (start <= value.size()) {
            const auto comma = value.find(',', start);
            const auto part = value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            if (n == 3) throw ConfigError("config 'loss_weights' needs exactly 3 comma-separated values");
            w[n++] = parse_double(key, part);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (n != 3) throw ConfigError("config 'loss_weights' needs exactly 3 comma-separated values");
        c.loss_weights = w;
    }
    else if (key == "k_folds") c.k_folds = parse_unsigned(key, value);
    else if (key == "seed") c.seed = parse_unsigned(key, value);
    else if (key == "layers" || key == "graph_layers") c.graph_layers = parse_unsigned(key, value);
    else if (key == "aggregator") c.aggregator = parse_aggregator(value);
    else if (key == "normalization") c.normalization = parse_normalization(value);
    else if (key == "convolutional_variant") c.convolutional_variant = parse_bool(key, value);
    else if (key == "attention_heads") c.attention_heads = parse_unsigned(key, value);
    else if (key == "lstm_hidden") c.lstm_hidden = parse_unsigned(key, value);
    else if (key == "grad_clip") c.grad_clip = parse_double(key, value);
    else if (key == "combiner") c.combiner = parse_combiner(value);
    else if (key == "val_fraction") c.val_fraction = parse_double(key, value);
    else if (key == "balance") c.balance = parse_bool(key, value);
    else if (key == "parallel_folds") c.parallel_folds = parse_unsigned(key, value);
    else if (key == "export_embeddings") c.export_embeddings = parse_bool(key, value);
    else throw ConfigError("unknown config key '" + std::string(key_text) + "'");
}

PreparedData prepare_dataset(const RawTable& raw, std::string_view task, bool balance, std::uint64_t seed) {
    const auto& schema = builtin_schema(raw.dataset);
    const auto& target = schema.target(task);
    const auto encoded = encode_categoricals(raw, schema);
    FeatureMatrix full = build_feature_matrix(encoded, schema, task);
    const auto& labels = full.labels.at(target.task_id);

    std::vector<std::size_t> keep;
    if (balance) {
        keep = balance_classes(labels, target.n_classes(), seed);
    } else {
        keep.resize(full.rows);
        for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    }
    PreparedData out;
    out.dataset = raw.dataset;
    out.task = target.task_id;
    out.matrix = full.select_rows(keep);
    out.labels = out.matrix.labels.at(target.task_id);
    out.class_names = target.levels;
    return out;
}

PreparedData load_prepared(const std::filesystem::path& path, DatasetId dataset, std::string_view task, bool balance,
                           std::uint64_t seed) {
    auto data = prepare_dataset(load_dataset(path, dataset), task, balance, seed);
    data.source = path.filename().string();
    return data;
}

ModelSpec model_spec(const TrainConfig& config, std::size_t features, std::size_t classes) {
    ModelSpec spec;
    spec.features = features;
    spec.classes = classes;
    spec.variant = config.variant;
    spec.graph_layers = config.graph_layers;
    spec.sage.aggregator = config.aggregator;
    spec.sage.normalization = config.normalization;
    spec.sage.convolutional_variant = config.convolutional_variant;
    spec.attention_heads = config.attention_heads;
    spec.lstm_hidden = config.lstm_hidden;
    spec.seed = config.seed;
    return spec;
}

HybridModel build_model(const TrainConfig& config, const DatasetSchema& schema) {
    const auto& target = schema.target(config.task);
    std::size_t features = schema.features.size();
    if (schema.feature_index(target.name)) --features;
    return HybridModel::build(model_spec(config, features, static_cast<std::size_t>(target.n_classes())));
}

Tensor total_loss(std::span<const int> targets, const Tensor& out_graph, const Tensor& out_conv, const Tensor& out_lstm,
                  const std::array<double, 3>& weights) {
    if (out_graph.shape() != out_conv.shape() || out_graph.shape() != out_lstm.shape()) {
        throw DimensionError("total_loss: head outputs " + shape_to_string(out_graph.shape()) + ", " +
                             shape_to_string(out_conv.shape()) + ", " + shape_to_string(out_lstm.shape()) + " differ");
    }
    Tensor loss = ops::scale(ops::nll_loss(out_graph, targets), weights[0]);
    loss = ops::add(loss, ops::scale(ops::nll_loss(out_conv, targets), weights[1]));
    return ops::add(loss, ops::scale(ops::nll_loss(out_lstm, targets), weights[2]));
}

LossTerms total_loss(std::span<const int> targets, const HeadOutputs& heads, const std::array<double, 3>& weights) {
    LossTerms t;
    const Tensor g = ops::nll_loss(heads.graph, targets);
    t.graph = g.item();
    t.total = ops::scale(g, weights[0]);
    if (heads.conv.defined()) {
        const Tensor c = ops::nll_loss(heads.conv, targets);
        t.conv = c.item();
        t.total = ops::add(t.total, ops::scale(c, weights[1]));
    }
    if (heads.lstm.defined()) {
        const Tensor l = ops::nll_loss(heads.lstm, targets);
        t.lstm = l.item();
        t.total = ops::add(t.total, ops::scale(l, weights[2]));
    }
    return t;
}

FoldSplit kfold_split(std::size_t n_windows, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k-fold split needs k >= 2");
    if (n_windows < k) {
        throw ConfigError("k-fold split needs at least k = " + std::to_string(k) + " windows, got " +
                          std::to_string(n_windows));
    }
    std::vector<std::size_t> order(n_windows);
    for (std::size_t i = 0; i < n_windows; ++i) order[i] = i;
    seeded_shuffle(order, seed);
    FoldSplit split;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n_windows / k + (f < n_windows % k ? 1 : 0);
        split.folds.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                 order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return split;
}

WindowSample make_window(const FeatureMatrix& scaled, std::span<const int> labels, const WindowRange& range,
                         std::size_t index, const GraphParams& params) {
    if (range.end > scaled.rows || range.end > labels.size() || range.begin >= range.end) {
        throw DimensionError("window [" + std::to_string(range.begin) + ", " + std::to_string(range.end) +
                             ") outside the data");
    }
    const auto features = std::span<const double>(scaled.values).subspan(range.begin * scaled.cols, range.size() * scaled.cols);
    const auto graph = build_graph(features, range.size(), scaled.cols, labels.subspan(range.begin, range.size()), params);
    WindowSample s;
    s.index = index;
    s.graph = GraphContext::from_graph(graph);
    s.labels = graph.labels;
    return s;
}

std::vector<int> argmax_rows(const Tensor& scores) {
    const std::size_t n = scores.rows(), c = scores.cols();
    std::vector<int> out(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = scores.data().subspan(r * c, c);
        out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

Tensor combine_heads(const HeadOutputs& heads, Combiner combiner) {
    if (combiner == Combiner::GraphOnly || !heads.conv.defined() || !heads.lstm.defined()) return heads.graph;
    return ops::scale(ops::add(ops::add(heads.graph, heads.conv), heads.lstm), 1.0 / 3.0);
}

Prediction predict(HybridModel& model, const GraphContext& graph, Combiner combiner) {
    NoGradGuard guard;
    Prediction p;
    p.heads = model.forward(graph, false);
    p.log_probs = combine_heads(p.heads, combiner);
    p.classes = argmax_rows(p.log_probs);
    return p;
}

TrainHistory train_fold(HybridModel& model, std::span<const WindowSample> train, std::span<const WindowSample> val,
                        const TrainConfig& config, const FoldOptions& options) {
    if (train.empty()) throw ConfigError("fold " + std::to_string(options.fold) + " has no training windows");
    Adam adam;
    adam.add_group(kGraphGroup, model.group_parameters(kGraphGroup), {.lr = config.lr_graph, .weight_decay = config.weight_decay});
    const auto seq = model.group_parameters(kSequenceGroup);
    if (!seq.empty()) adam.add_group(kSequenceGroup, seq, {.lr = config.lr_seq, .weight_decay = config.weight_decay});
    std::vector<Tensor> all_params = model.group_parameters(kGraphGroup);
    all_params.insert(all_params.end(), seq.begin(), seq.end());

    TrainHistory history;
    HybridModel::Snapshot best = model.snapshot();
    history.best_val_acc = -1.0;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        seeded_shuffle(order, options.seed + static_cast<std::uint64_t>(epoch));
        EpochRecord rec;
        rec.epoch = epoch;
        std::size_t correct = 0, seen = 0;
        for (std::size_t i : order) {
            const auto& w = train[i];
            adam.zero_grad();
            const auto heads = model.forward(w.graph, true);
            const auto loss = total_loss(w.labels, heads, config.loss_weights);
            const double value = loss.total.item();
            if (!std::isfinite(value)) {
                std::string msg = "non-finite loss in fold " + std::to_string(options.fold) + " epoch " +
                                  std::to_string(epoch) + " window " + std::to_string(w.index);
                if (options.failure_dir) {
                    std::filesystem::create_directories(*options.failure_dir);
                    save_checkpoint(*options.failure_dir / ("fold_" + std::to_string(options.fold)), model.parameters(),
                                    &adam, model.metadata_json());
                    history.epochs.push_back(rec);
                    write_text(*options.failure_dir / ("history_fold" + std::to_string(options.fold) + ".csv"),
                               history_csv(history));
                    msg += "; state dumped to " + options.failure_dir->string();
                }
                throw TrainingAborted(msg, options.fold, epoch);
            }
            backward(loss.total);
            clip_grad_norm(all_params, config.grad_clip);
            adam.step();
            rec.total_loss += value;
            rec.graph_loss += loss.graph;
            rec.conv_loss += loss.conv;
            rec.lstm_loss += loss.lstm;
            {
                NoGradGuard guard;
                correct += count_correct(argmax_rows(combine_heads(heads, config.combiner)), w.labels);
            }
            seen += w.labels.size();
        }
        const double n = static_cast<double>(train.size());
        rec.total_loss /= n;
        rec.graph_loss /= n;
        rec.conv_loss /= n;
        rec.lstm_loss /= n;
        rec.train_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(seen);

        // Selection scores the end-of-epoch weights in eval mode, the state a
        // snapshot restores. Without validation windows the training windows
        // stand in.
        const auto selection = val.empty() ? train : val;
        std::size_t vc = 0, vn = 0;
        for (const auto& w : selection) {
            vc += count_correct(predict(model, w.graph, config.combiner).classes, w.labels);
            vn += w.labels.size();
        }
        rec.val_acc = 100.0 * static_cast<double>(vc) / static_cast<double>(vn);
        if (rec.val_acc > history.best_val_acc) {
            history.best_val_acc = rec.val_acc;
            history.best_epoch = epoch;
            best = model.snapshot();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        history.epochs.push_back(rec);
        log_debug("fold " + std::to_string(options.fold) + " epoch " + std::to_string(epoch) + " loss " +
                  format_double(rec.total_loss) + " train " + format_double(rec.train_acc) + " val " +
                  format_double(rec.val_acc));
    }
    model.restore(best);
    return history;
}

ExperimentReport run_experiment(const TrainConfig& config, const PreparedData& data, const ExperimentOptions& options) {
    config.validate();
    if (data.dataset != config.dataset || data.task != builtin_schema(config.dataset).target(config.task).task_id) {
        throw ConfigError("prepared data is for " + to_string(data.dataset) + "/" + data.task + ", config asks for " +
                          to_string(config.dataset) + "/" + config.task);
    }
    const auto windows = window_partition(data.matrix.rows, config.window_size);
    const auto split = kfold_split(windows.windows.size(), config.k_folds, config.seed);
    const GraphParams gp{config.threshold, config.leak_alpha};
    const int classes = data.classes();
    const std::size_t k = split.folds.size();

    ExperimentReport report;
    report.config = config_entries(config);
    report.dataset = to_string(config.dataset);
    report.task = data.task;
    report.variant = to_string(config.variant);
    report.data_source = data.source;
    report.class_names = data.class_names;
    report.rows = data.matrix.rows;
    report.windows = windows.windows.size();
    report.folds.resize(k);
    std::vector<std::vector<EmbeddingTable>> fold_embeddings(k);

    auto run_fold = [&](int fold) {
        const auto fd = prepare_fold(config, data, windows, split, fold);
        const auto train = make_windows(fd, fd.fit_windows, data, windows, gp);
        const auto val = make_windows(fd, fd.val_windows, data, windows, gp);
        const auto test = make_windows(fd, fd.test_windows, data, windows, gp);

        auto spec = model_spec(config, data.matrix.cols, static_cast<std::size_t>(classes));
        spec.seed = fold_seed(config.seed, fold);
        auto model = HybridModel::build(spec);
        FoldOptions fo{fold, fold_seed(config.seed, fold), std::nullopt};
        if (options.failure_dir) fo.failure_dir = *options.failure_dir;

        FoldResult result;
        result.fold = fold;
        result.train_windows = train.size();
        result.val_windows = val.size();
        result.test_windows = fd.test_windows;
        result.history = train_fold(model, train, val, config, fo);
        if (options.checkpoint_dir) {
            const auto dir = *options.checkpoint_dir / ("fold_" + std::to_string(fold));
            std::filesystem::create_directories(dir);
            save_checkpoint(dir / "model", model.parameters(), nullptr, model.metadata_json());
        }

        result.confusion = ConfusionMatrix::zeros(classes);
        std::vector<EmbeddingTable> tables;
        if (config.export_embeddings) {
            for (const char* name : {"graph", "conv", "lstm", "hybrid"}) tables.push_back({name, 0, {}});
        }
        for (const auto& w : test) {
            const auto p = predict(model, w.graph, config.combiner);
            result.confusion += confusion(p.classes, w.labels, classes);
            if (!config.export_embeddings) continue;
            const Tensor* sources[] = {&p.heads.graph_features, &p.heads.conv_features, &p.heads.lstm_features, &p.log_probs};
            for (std::size_t t = 0; t < tables.size(); ++t) {
                const Tensor& src = *sources[t];
                if (!src.defined()) continue;
                tables[t].dims = src.cols();
                for (std::size_t node = 0; node < w.labels.size(); ++node) {
                    const auto row = src.data().subspan(node * src.cols(), src.cols());
                    tables[t].rows.push_back({fold, w.index, node, w.labels[node], p.classes[node], {row.begin(), row.end()}});
                }
            }
        }
        result.metrics = metrics_from_confusion(result.confusion);
        log_info(report.dataset + "/" + report.task + " " + report.variant + " fold " + std::to_string(fold + 1) + "/" +
                 std::to_string(k) + " accuracy " + format_percent(result.metrics.accuracy));
        report.folds[static_cast<std::size_t>(fold)] = std::move(result);
        fold_embeddings[static_cast<std::size_t>(fold)] = std::move(tables);
    };

    const std::size_t workers = std::min(config.parallel_folds, k);
    if (workers <= 1) {
        for (std::size_t f = 0; f < k; ++f) run_fold(static_cast<int>(f));
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(k);
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (std::size_t f = next++; f < k; f = next++) {
                    try {
                        run_fold(static_cast<int>(f));
                    } catch (...) {
                        errors[f] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    if (config.export_embeddings) {
        for (std::size_t t = 0; t < fold_embeddings.front().size(); ++t) {
            EmbeddingTable merged{fold_embeddings.front()[t].layer, 0, {}};
            for (auto& fe : fold_embeddings) {
                merged.dims = std::max(merged.dims, fe[t].dims);
                merged.rows.insert(merged.rows.end(), fe[t].rows.begin(), fe[t].rows.end());
            }
            if (!merged.rows.empty()) report.embeddings.push_back(std::move(merged));
        }
    }
    report.finalize();
    return report;
}

ExperimentReport run_experiment(const TrainConfig& config, const std::filesystem::path& path,
                                const ExperimentOptions& options) {
    config.validate();
    const auto data = load_prepared(path, config.dataset, config.task, config.balance, config.seed);
    return run_experiment(config, data, options);
}

std::vector<AblationRow> layer_ablation(const TrainConfig& base, const PreparedData& data,
                                        std::span<const std::size_t> layer_counts) {
    std::vector<AblationRow> rows;
    for (std::size_t layers : layer_counts) {
        TrainConfig config = base;
        config.graph_layers = layers;
        const auto report = run_experiment(config, data);
        rows.push_back({layers, report.aggregate.accuracy, report.mean_epoch_seconds()});
    }
    return rows;
}

BaselineAccuracy run_baselines(const TrainConfig& config, const PreparedData& data, std::size_t knn_k) {
    config.validate();
    const auto windows = window_partition(data.matrix.rows, config.window_size);
    const auto split = kfold_split(windows.windows.size(), config.k_folds, config.seed);
    const int classes = data.classes();
    auto majority_cm = ConfusionMatrix::zeros(classes);
    auto knn_cm = ConfusionMatrix::zeros(classes);
    auto logistic_cm = ConfusionMatrix::zeros(classes);

    auto gather = [&](const FeatureMatrix& m, const std::vector<std::size_t>& which) {
        LabeledRows out;
        out.cols = m.cols;
        for (std::size_t w : which)
            for (std::size_t r = windows.windows[w].begin; r < windows.windows[w].end; ++r) {
                const auto row = m.row(r);
                out.values.insert(out.values.end(), row.begin(), row.end());
                out.labels.push_back(data.labels[r]);
                ++out.rows;
            }
        return out;
    };

    for (std::size_t f = 0; f < split.folds.size(); ++f) {
        auto fd = prepare_fold(config, data, windows, split, static_cast<int>(f));
        // Baselines have no model selection, so validation windows train too.
        auto train_w = fd.fit_windows;
        train_w.insert(train_w.end(), fd.val_windows.begin(), fd.val_windows.end());
        const auto train = gather(fd.scaled, train_w);
        const auto test = gather(fd.scaled, fd.test_windows);

        const auto counts = class_counts(train.labels, classes);
        const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        majority_cm += confusion(std::vector<int>(test.rows, majority), test.labels, classes);
        knn_cm += confusion(knn_baseline(train, test, knn_k, classes), test.labels, classes);
        logistic_cm += confusion(logistic_baseline(train, test, classes), test.labels, classes);
    }
    return {metrics_from_confusion(majority_cm).accuracy, metrics_from_confusion(knn_cm).accuracy,
            metrics_from_confusion(logistic_cm).accuracy};
}

}  // namespace sagechain
