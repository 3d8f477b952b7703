#include "sagechain_cli/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sagechain/error.hpp"
#include "sagechain/log.hpp"
#include "sagechain/report.hpp"
#include "sagechain/synth.hpp"
#include "sagechain/trainer.hpp"

namespace sagechain::cli {

namespace {

// Flag values kept as text so they pass through the same parser as config
// file entries; unset flags stay empty.
struct CommonFlags {
    std::string dataset, path, task, variant, epochs, window, threshold, k_folds, seed, layers, parallel_folds;
    std::string config_file, out;
    int verbose = 0;
    bool quiet = false;
};

void add_data_flags(CLI::App& cmd, CommonFlags& f) {
    cmd.add_option("--dataset", f.dataset, "dataco, shipping or smart-logistics");
    cmd.add_option("--path", f.path, "dataset CSV or ingest cache (default: $SAGECHAIN_DATA_DIR/<file>)");
    cmd.add_option("--config", f.config_file, "flat key = value config file");
    cmd.add_option("--out", f.out, "output directory");
    cmd.add_flag("-v,--verbose", f.verbose, "more logging (repeat for debug)");
    cmd.add_flag("-q,--quiet", f.quiet, "errors only");
}

void add_train_flags(CLI::App& cmd, CommonFlags& f) {
    add_data_flags(cmd, f);
    cmd.add_option("--task", f.task, "target task id");
    cmd.add_option("--variant", f.variant, "h-gsn, h-gatn, gsn or gatn");
    cmd.add_option("--epochs", f.epochs, "maximum epochs per fold");
    cmd.add_option("--window", f.window, "rows per window graph");
    cmd.add_option("--threshold", f.threshold, "adjacency threshold on |leaky_relu(corr)|");
    cmd.add_option("--k-folds", f.k_folds, "cross-validation folds");
    cmd.add_option("--seed", f.seed, "seed for balancing, splits and init");
    cmd.add_option("--parallel-folds", f.parallel_folds, "fold worker threads");
}

void apply_verbosity(const CommonFlags& f) {
    if (f.quiet) set_log_level(LogLevel::Quiet);
    else if (f.verbose >= 2) set_log_level(LogLevel::Debug);
    else if (f.verbose == 1) set_log_level(LogLevel::Info);
    else set_log_level(LogLevel::Warn);
}

// Merged view of defaults, config file and flags.
struct Resolved {
    TrainConfig config;
    std::string path;
    std::string out;
};

Resolved resolve(const CommonFlags& f) {
    Resolved r;
    std::map<std::string, std::string> entries;
    if (!f.config_file.empty()) entries = read_config_file(f.config_file);
    auto take = [&](const char* key, const std::string& flag) {
        if (!flag.empty()) entries[key] = flag;
    };
    take("dataset", f.dataset);
    take("path", f.path);
    take("out", f.out);
    take("task", f.task);
    take("variant", f.variant);
    take("epochs", f.epochs);
    take("window", f.window);
    take("threshold", f.threshold);
    take("k_folds", f.k_folds);
    take("seed", f.seed);
    take("layers", f.layers);
    take("parallel_folds", f.parallel_folds);

    bool task_given = false;
    // Dataset first so a task default can follow it.
    if (auto it = entries.find("dataset"); it != entries.end()) set_config_value(r.config, "dataset", it->second);
    for (const auto& [key, value] : entries) {
        if (key == "dataset") continue;
        if (key == "path") r.path = value;
        else if (key == "out") r.out = value;
        else {
            set_config_value(r.config, key, value);
            task_given = task_given || key == "task";
        }
    }
    if (!task_given) r.config.task = builtin_schema(r.config.dataset).targets.front().task_id;
    if (r.config.dataset == DatasetId::SmartLogistics && !task_given) r.config.task = "traffic_status";
    r.config.validate();
    return r;
}

std::filesystem::path dataset_path(const Resolved& r) {
    if (!r.path.empty()) return r.path;
    if (const char* dir = std::getenv("SAGECHAIN_DATA_DIR"); dir && *dir) {
        return std::filesystem::path(dir) / default_file_name(r.config.dataset);
    }
    throw ConfigError("no dataset path: pass --path or set SAGECHAIN_DATA_DIR");
}

RawTable load_table(const std::filesystem::path& path, DatasetId dataset) {
    if (!std::filesystem::exists(path)) throw SchemaError("dataset file not found: " + path.string());
    if (path.extension() == ".cache") {
        auto t = read_cache(path);
        if (t.dataset != dataset) {
            throw SchemaError("cache " + path.string() + " holds " + to_string(t.dataset) + ", expected " + to_string(dataset));
        }
        return t;
    }
    return load_dataset(path, dataset);
}

PreparedData load_data(const Resolved& r) {
    const auto path = dataset_path(r);
    auto data = prepare_dataset(load_table(path, r.config.dataset), r.config.task, r.config.balance, r.config.seed);
    data.source = path.filename().string();
    return data;
}

std::string default_out(const TrainConfig& c) {
    return "out/" + to_string(c.dataset) + "_" + c.task + "_" + to_string(c.variant);
}

int cmd_ingest(const CommonFlags& f, std::ostream& out) {
    auto r = resolve(f);
    const auto path = dataset_path(r);
    const auto& schema = builtin_schema(r.config.dataset);
    const auto raw = load_table(path, r.config.dataset);
    const auto encoded = encode_categoricals(raw, schema);

    out << "dataset " << to_string(r.config.dataset) << " from " << path.string() << "\n";
    out << "rows: " << encoded.row_count() << " kept, " << raw.rejected_rows << " rejected\n";
    if (!raw.dropped_columns.empty()) {
        out << "dropped columns:";
        for (const auto& c : raw.dropped_columns) out << " '" << c << "'";
        out << "\n";
    }
    out << "\nencodings\n";
    for (const auto& col : schema.features) {
        if (col.kind != ColumnKind::Categorical) continue;
        out << "  " << col.name << ":";
        for (std::size_t k = 0; k < col.levels.size(); ++k) out << " " << col.levels[k] << "=" << k;
        out << "\n";
    }
    out << "\nclass distributions\n";
    for (const auto& t : schema.targets) {
        const auto labels = extract_target(encoded, schema, t.task_id);
        out << "  " << t.task_id << " (" << t.name << ", " << t.n_classes() << " classes)\n";
        for (std::size_t k = 0; k < t.levels.size(); ++k)
            out << "    " << std::left << std::setw(16) << t.levels[k] << std::right << labels.class_counts[k] << "\n";
    }
    const std::filesystem::path cache =
        std::filesystem::path(r.out.empty() ? "out" : r.out) / (to_string(r.config.dataset) + ".cache");
    const auto info = write_cache(cache, encoded);
    char sum[24];
    std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(info.checksum));
    out << "\ncache: " << cache.string() << " (" << info.bytes << " bytes, fnv1a " << sum << ")\n";
    return kExitOk;
}

int cmd_train(const CommonFlags& f, std::ostream& out, std::ostream& err) {
    const auto r = resolve(f);
    const auto data = load_data(r);
    const std::filesystem::path dir = r.out.empty() ? default_out(r.config) : r.out;
    ExperimentOptions options;
    options.checkpoint_dir = dir / "checkpoints";
    options.failure_dir = dir / "failed";
    try {
        const auto report = run_experiment(r.config, data, options);
        render_report(report, dir);
        out << format_summary(report);
        out << "\nartifacts: " << dir.string() << "\n";
        return kExitOk;
    } catch (const TrainingAborted& e) {
        std::filesystem::create_directories(*options.failure_dir);
        std::ofstream note(*options.failure_dir / "error.txt");
        note << e.what() << "\nfold " << e.fold() << " epoch " << e.epoch() << "\n";
        err << "training aborted: " << e.what() << "\n";
        return kExitTraining;
    }
}

int cmd_ablate(const CommonFlags& f, const std::string& layer_list, std::ostream& out) {
    const auto r = resolve(f);
    std::vector<std::size_t> counts;
    std::stringstream s(layer_list);
    std::string part;
    while (std::getline(s, part, ',')) {
        if (part.empty() || part.find_first_not_of("0123456789 ") != std::string::npos) {
            throw ConfigError("--layers expects a comma-separated list of positive integers, got '" + layer_list + "'");
        }
        counts.push_back(std::stoul(part));
        if (counts.back() == 0) throw ConfigError("--layers entries must be positive");
    }
    if (counts.empty()) throw ConfigError("--layers is empty");
    const auto data = load_data(r);
    const auto rows = layer_ablation(r.config, data, counts);
    const std::filesystem::path dir =
        r.out.empty() ? "out/" + to_string(r.config.dataset) + "_" + r.config.task + "_ablation" : r.out;
    std::filesystem::create_directories(dir);
    const auto csv = ablation_csv(rows);
    std::ofstream(dir / "ablation.csv", std::ios::binary) << csv;
    out << std::left << std::setw(8) << "layers" << std::right << std::setw(10) << "accuracy" << std::setw(18)
        << "seconds/epoch" << "\n";
    for (const auto& row : rows) {
        out << std::left << std::setw(8) << row.layers << std::right << std::setw(10) << format_percent(row.accuracy)
            << std::setw(18) << format_sig6(row.seconds_per_epoch) << "\n";
    }
    out << "\ntable: " << (dir / "ablation.csv").string() << "\n";
    return kExitOk;
}

int cmd_report(const std::string& target, std::ostream& out) {
    std::filesystem::path path = target;
    if (std::filesystem::is_directory(path)) path /= "report.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open report " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    out << format_summary(report_from_json(text.str()));
    return kExitOk;
}

int cmd_synth(const std::string& dataset, std::size_t rows, std::uint64_t seed, bool separable,
              const std::string& target, std::ostream& out) {
    const auto id = parse_dataset_id(dataset);
    if (separable && id != DatasetId::Shipping) throw ConfigError("--separable uses the shipping layout");
    const auto n = rows ? rows : default_synth_rows(id);
    const auto csv = separable ? separable_csv(n, seed) : synth_csv(id, n, seed);
    if (target.empty() || target == "-") {
        out << csv;
    } else {
        const std::filesystem::path p = target;
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        std::ofstream file(p, std::ios::binary);
        file << csv;
        if (!file) throw std::runtime_error("cannot write " + target);
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hybrid GraphSAGE supply-chain classifier", "sagechain"};
    app.require_subcommand(1);
    CommonFlags f;

    auto* ingest = app.add_subcommand("ingest", "summarize a dataset and write an encoded cache");
    add_data_flags(*ingest, f);

    auto* train = app.add_subcommand("train", "k-fold train and evaluate one model variant");
    add_train_flags(*train, f);
    train->add_option("--layers", f.layers, "graph layers");

    std::string layer_list = "2,3,4,5";
    auto* ablate = app.add_subcommand("ablate", "repeat training across graph layer counts");
    add_train_flags(*ablate, f);
    ablate->add_option("--layers", layer_list, "comma-separated layer counts");

    std::string report_target;
    auto* report = app.add_subcommand("report", "print a summary of an existing report");
    report->add_option("report", report_target, "report.json or the directory holding it")->required();

    std::string synth_dataset = "smart-logistics", synth_out;
    std::size_t synth_rows = 0;
    std::uint64_t synth_seed = 17;
    bool separable = false;
    auto* synth = app.add_subcommand("synth", "write a seeded surrogate dataset CSV");
    synth->add_option("--dataset", synth_dataset, "dataco, shipping or smart-logistics");
    synth->add_option("--rows", synth_rows, "row count (default per dataset)");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output file (default stdout)");
    synth->add_flag("--separable", separable, "wide-margin shipment-mode classes (shipping layout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInput;
    }

    apply_verbosity(f);
    try {
        if (*ingest) return cmd_ingest(f, out);
        if (*train) return cmd_train(f, out, err);
        if (*ablate) return cmd_ablate(f, layer_list, out);
        if (*report) return cmd_report(report_target, out);
        if (*synth) return cmd_synth(synth_dataset, synth_rows, synth_seed, separable, synth_out, out);
    } catch (const TrainingAborted& e) {
        err << "training aborted: " << e.what() << "\n";
        return kExitTraining;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const EncodingError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitTraining;
    }
    return kExitInput;
}

}  // namespace sagechain::cli
