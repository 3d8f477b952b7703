#include "sagechain/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sagechain/error.hpp"

namespace sagechain {

using nlohmann::json;

double TrainHistory::mean_epoch_seconds() const {
    if (epochs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : epochs) s += e.seconds;
    return s / static_cast<double>(epochs.size());
}

void ExperimentReport::finalize() {
    if (folds.empty()) throw std::invalid_argument("experiment report has no folds");
    aggregate_confusion = ConfusionMatrix::zeros(folds.front().confusion.classes);
    for (const auto& f : folds) aggregate_confusion += f.confusion;
    aggregate = metrics_from_confusion(aggregate_confusion);
}

double ExperimentReport::mean_epoch_seconds() const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& f : folds)
        for (const auto& e : f.history.epochs) {
            s += e.seconds;
            ++n;
        }
    return n ? s / static_cast<double>(n) : 0.0;
}

std::string format_sig6(double value) {
    if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    std::string s = buf;
    return s == "-0" ? "0" : s;
}

std::string format_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", value);
    std::string s = buf;
    return s == "-0.0" ? "0.0" : s;
}

namespace {

json confusion_json(const ConfusionMatrix& cm) {
    json rows = json::array();
    for (int t = 0; t < cm.classes; ++t) {
        json row = json::array();
        for (int p = 0; p < cm.classes; ++p) row.push_back(cm.at(t, p));
        rows.push_back(row);
    }
    return rows;
}

ConfusionMatrix confusion_from_json(const json& j) {
    const int n = static_cast<int>(j.size());
    auto cm = ConfusionMatrix::zeros(std::max(n, 1));
    if (n == 0) throw SchemaError("report: empty confusion matrix");
    for (int t = 0; t < n; ++t) {
        if (static_cast<int>(j[static_cast<std::size_t>(t)].size()) != n) throw SchemaError("report: confusion matrix is not square");
        for (int p = 0; p < n; ++p) cm.at(t, p) = j[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)].get<std::uint64_t>();
    }
    return cm;
}

json metrics_json(const MetricsRow& m) {
    json per = json::array();
    for (const auto& c : m.per_class) {
        per.push_back({{"precision", c.precision},
                       {"recall", c.recall},
                       {"f1", c.f1},
                       {"support", c.support},
                       {"precision_undefined", c.precision_undefined},
                       {"recall_undefined", c.recall_undefined}});
    }
    return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"per_class", per}};
}

MetricsRow metrics_from_json(const json& j) {
    MetricsRow m;
    m.accuracy = j.at("accuracy").get<double>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    for (const auto& c : j.at("per_class")) {
        m.per_class.push_back({c.at("precision").get<double>(), c.at("recall").get<double>(), c.at("f1").get<double>(),
                               c.at("support").get<std::uint64_t>(), c.at("precision_undefined").get<bool>(),
                               c.at("recall_undefined").get<bool>()});
    }
    return m;
}

json history_json(const TrainHistory& h) {
    json epochs = json::array();
    for (const auto& e : h.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"total_loss", e.total_loss},
                          {"graph_loss", e.graph_loss},
                          {"conv_loss", e.conv_loss},
                          {"lstm_loss", e.lstm_loss},
                          {"train_acc", e.train_acc},
                          {"val_acc", e.val_acc}});
    }
    return {{"best_epoch", h.best_epoch}, {"best_val_acc", h.best_val_acc}, {"epochs", epochs}};
}

TrainHistory history_from_json(const json& j) {
    TrainHistory h;
    h.best_epoch = j.at("best_epoch").get<int>();
    h.best_val_acc = j.at("best_val_acc").get<double>();
    for (const auto& e : j.at("epochs")) {
        EpochRecord r;
        r.epoch = e.at("epoch").get<int>();
        r.total_loss = e.at("total_loss").get<double>();
        r.graph_loss = e.at("graph_loss").get<double>();
        r.conv_loss = e.at("conv_loss").get<double>();
        r.lstm_loss = e.at("lstm_loss").get<double>();
        r.train_acc = e.at("train_acc").get<double>();
        r.val_acc = e.at("val_acc").get<double>();
        h.epochs.push_back(r);
    }
    return h;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string file_safe(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
    return s;
}

}  // namespace

std::string report_to_json(const ExperimentReport& r) {
    json config = json::array();
    for (const auto& [k, v] : r.config) config.push_back({k, v});
    json folds = json::array();
    for (const auto& f : r.folds) {
        folds.push_back({{"fold", f.fold},
                         {"train_windows", f.train_windows},
                         {"val_windows", f.val_windows},
                         {"test_windows", f.test_windows},
                         {"confusion", confusion_json(f.confusion)},
                         {"metrics", metrics_json(f.metrics)},
                         {"history", history_json(f.history)}});
    }
    json j = {{"format", "sagechain-report"},
              {"version", 1},
              {"config", config},
              {"dataset", r.dataset},
              {"task", r.task},
              {"variant", r.variant},
              {"data_source", r.data_source},
              {"class_names", r.class_names},
              {"rows", r.rows},
              {"windows", r.windows},
              {"folds", folds},
              {"aggregate", {{"confusion", confusion_json(r.aggregate_confusion)}, {"metrics", metrics_json(r.aggregate)}}}};
    if (!r.embeddings.empty()) {
        json emb = json::array();
        for (const auto& t : r.embeddings) {
            json rows = json::array();
            for (const auto& row : t.rows)
                rows.push_back({row.fold, row.window, row.node, row.label, row.predicted, row.values});
            emb.push_back({{"layer", t.layer}, {"dims", t.dims}, {"rows", rows}});
        }
        j["embeddings"] = emb;
    }
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "sagechain-report") throw SchemaError("report: unexpected format tag");
        ExperimentReport r;
        for (const auto& kv : j.at("config")) r.config.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
        r.dataset = j.at("dataset").get<std::string>();
        r.task = j.at("task").get<std::string>();
        r.variant = j.at("variant").get<std::string>();
        r.data_source = j.at("data_source").get<std::string>();
        r.class_names = j.at("class_names").get<std::vector<std::string>>();
        r.rows = j.at("rows").get<std::size_t>();
        r.windows = j.at("windows").get<std::size_t>();
        for (const auto& f : j.at("folds")) {
            FoldResult fr;
            fr.fold = f.at("fold").get<int>();
            fr.train_windows = f.at("train_windows").get<std::size_t>();
            fr.val_windows = f.at("val_windows").get<std::size_t>();
            fr.test_windows = f.at("test_windows").get<std::vector<std::size_t>>();
            fr.confusion = confusion_from_json(f.at("confusion"));
            fr.metrics = metrics_from_json(f.at("metrics"));
            fr.history = history_from_json(f.at("history"));
            r.folds.push_back(std::move(fr));
        }
        r.aggregate_confusion = confusion_from_json(j.at("aggregate").at("confusion"));
        r.aggregate = metrics_from_json(j.at("aggregate").at("metrics"));
        if (r.aggregate_confusion.classes != r.classes()) throw SchemaError("report: class names do not match confusion size");
        if (j.contains("embeddings")) {
            for (const auto& t : j.at("embeddings")) {
                EmbeddingTable table{t.at("layer").get<std::string>(), t.at("dims").get<std::size_t>(), {}};
                for (const auto& row : t.at("rows")) {
                    table.rows.push_back({row.at(0).get<int>(), row.at(1).get<std::size_t>(), row.at(2).get<std::size_t>(),
                                          row.at(3).get<int>(), row.at(4).get<int>(), row.at(5).get<std::vector<double>>()});
                }
                r.embeddings.push_back(std::move(table));
            }
        }
        return r;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed report: ") + e.what());
    }
}

std::string history_csv(const TrainHistory& h) {
    std::string out = "epoch,total_loss,graph_loss,conv_loss,lstm_loss,train_acc,val_acc,seconds\n";
    for (const auto& e : h.epochs) {
        out += std::to_string(e.epoch) + "," + format_sig6(e.total_loss) + "," + format_sig6(e.graph_loss) + "," +
               format_sig6(e.conv_loss) + "," + format_sig6(e.lstm_loss) + "," + format_percent(e.train_acc) + "," +
               format_percent(e.val_acc) + "," + format_sig6(e.seconds) + "\n";
    }
    return out;
}

std::string metrics_csv(const ExperimentReport& r) {
    std::string out = "fold,samples,accuracy,precision,recall,f1\n";
    auto line = [&](const std::string& name, const ConfusionMatrix& cm, const MetricsRow& m) {
        out += name + "," + std::to_string(cm.total()) + "," + format_percent(m.accuracy) + "," +
               format_percent(m.precision) + "," + format_percent(m.recall) + "," + format_percent(m.f1) + "\n";
    };
    for (const auto& f : r.folds) line(std::to_string(f.fold), f.confusion, f.metrics);
    line("aggregate", r.aggregate_confusion, r.aggregate);
    return out;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::string out = "true\\pred";
    for (int p = 0; p < cm.classes; ++p) out += ",c" + std::to_string(p);
    out += "\n";
    for (int t = 0; t < cm.classes; ++t) {
        out += "c" + std::to_string(t);
        for (int p = 0; p < cm.classes; ++p) out += "," + std::to_string(cm.at(t, p));
        out += "\n";
    }
    return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = "layers,accuracy,seconds_per_epoch\n";
    for (const auto& r : rows)
        out += std::to_string(r.layers) + "," + format_percent(r.accuracy) + "," + format_sig6(r.seconds_per_epoch) + "\n";
    return out;
}

void render_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
    if (report.folds.empty()) throw std::invalid_argument("cannot render a report without folds");
    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("report.json", report_to_json(report));
    files.emplace_back("metrics.csv", metrics_csv(report));
    files.emplace_back("confusion_" + file_safe(report.task) + ".csv", confusion_csv(report.aggregate_confusion));
    json timing = {{"mean_epoch_seconds", report.mean_epoch_seconds()}, {"folds", json::array()}};
    for (const auto& f : report.folds) {
        files.emplace_back("history_fold" + std::to_string(f.fold) + ".csv", history_csv(f.history));
        double total = 0.0;
        for (const auto& e : f.history.epochs) total += e.seconds;
        timing["folds"].push_back({{"fold", f.fold}, {"seconds", total}, {"mean_epoch_seconds", f.history.mean_epoch_seconds()}});
    }
    files.emplace_back("timing.json", timing.dump(2) + "\n");
    for (const auto& t : report.embeddings) {
        std::string csv = "fold,window,node,label,predicted";
        for (std::size_t d = 0; d < t.dims; ++d) csv += ",d" + std::to_string(d);
        csv += "\n";
        for (const auto& row : t.rows) {
            csv += std::to_string(row.fold) + "," + std::to_string(row.window) + "," + std::to_string(row.node) + "," +
                   std::to_string(row.label) + "," + std::to_string(row.predicted);
            for (double v : row.values) csv += "," + format_sig6(v);
            csv += "\n";
        }
        files.emplace_back("embeddings_" + file_safe(t.layer) + ".csv", std::move(csv));
    }

    std::filesystem::create_directories(out_dir);
    const auto staging = out_dir / ".staging";
    std::filesystem::remove_all(staging);
    std::filesystem::create_directories(staging);
    try {
        for (const auto& [name, text] : files) write_file(staging / name, text);
    } catch (...) {
        std::filesystem::remove_all(staging);
        throw;
    }
    for (const auto& [name, text] : files) std::filesystem::rename(staging / name, out_dir / name);
    std::filesystem::remove_all(staging);
}

std::string format_confusion(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
    auto name = [&](int k) {
        return static_cast<std::size_t>(k) < class_names.size() ? class_names[static_cast<std::size_t>(k)] : "c" + std::to_string(k);
    };
    std::size_t width = std::string("true\\pred").size();
    for (int k = 0; k < cm.classes; ++k) width = std::max(width, name(k).size());
    for (auto c : cm.counts) width = std::max(width, std::to_string(c).size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "true\\pred";
    for (int p = 0; p < cm.classes; ++p) out << "  " << std::right << std::setw(static_cast<int>(width)) << name(p);
    out << "\n";
    for (int t = 0; t < cm.classes; ++t) {
        out << std::left << std::setw(static_cast<int>(width)) << name(t);
        for (int p = 0; p < cm.classes; ++p) out << "  " << std::right << std::setw(static_cast<int>(width)) << cm.at(t, p);
        out << "\n";
    }
    return out.str();
}

std::string format_summary(const ExperimentReport& r) {
    std::ostringstream out;
    out << r.dataset << " / " << r.task << " / " << r.variant;
    if (!r.data_source.empty()) out << "  (data: " << r.data_source << ")";
    out << "\n" << r.rows << " rows, " << r.windows << " windows, " << r.folds.size() << " folds\n\n";
    out << std::left << std::setw(10) << "fold" << std::right << std::setw(10) << "accuracy" << std::setw(11)
        << "precision" << std::setw(9) << "recall" << std::setw(8) << "f1" << "\n";
    auto line = [&](const std::string& name, const MetricsRow& m) {
        out << std::left << std::setw(10) << name << std::right << std::setw(10) << format_percent(m.accuracy)
            << std::setw(11) << format_percent(m.precision) << std::setw(9) << format_percent(m.recall) << std::setw(8)
            << format_percent(m.f1) << "\n";
    };
    for (const auto& f : r.folds) line(std::to_string(f.fold), f.metrics);
    line("aggregate", r.aggregate);
    out << "\n" << format_confusion(r.aggregate_confusion, r.class_names);
    return out.str();
}

}  // namespace sagechain
