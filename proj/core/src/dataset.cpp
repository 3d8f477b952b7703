#include "sagechain/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "sagechain/csv.hpp"
#include "sagechain/error.hpp"
#include "sagechain/log.hpp"

namespace sagechain {

namespace {

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool parse_number(std::string_view text, double& out) {
    text = trim_view(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

struct ColumnPlan {
    std::string name;
    bool numeric = false;
    std::size_t source = 0;
};

std::vector<ColumnPlan> plan_columns(const DatasetSchema& schema) {
    std::vector<ColumnPlan> plan;
    std::set<std::string> seen;
    for (const auto& f : schema.features) {
        plan.push_back({f.name, f.kind != ColumnKind::Categorical, 0});
        seen.insert(normalize_key(f.name));
    }
    for (const auto& t : schema.targets)
        if (seen.insert(normalize_key(t.name)).second) plan.push_back({t.name, false, 0});
    return plan;
}

}  // namespace

std::size_t RawTable::column_index(std::string_view name) const {
    const auto key = normalize_key(name);
    for (std::size_t i = 0; i < column_names.size(); ++i)
        if (normalize_key(column_names[i]) == key) return i;
    throw SchemaError("table has no column '" + std::string(name) + "'");
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix out;
    out.rows = indices.size();
    out.cols = cols;
    out.column_names = column_names;
    out.scaler = scaler;
    out.values.reserve(indices.size() * cols);
    for (std::size_t r : indices) {
        auto src = row(r);
        out.values.insert(out.values.end(), src.begin(), src.end());
    }
    for (const auto& [task, labels] : this->labels) {
        auto& dst = out.labels[task];
        dst.reserve(indices.size());
        for (std::size_t r : indices) dst.push_back(labels[r]);
    }
    return out;
}

RawTable load_dataset(const std::filesystem::path& path, DatasetId dataset) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open dataset file " + path.string());
    return load_dataset(in, dataset);
}

RawTable load_dataset(std::istream& in, DatasetId dataset) {
    const auto& schema = builtin_schema(dataset);
    CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) throw SchemaError("dataset file is empty (header row required)");

    auto plan = plan_columns(schema);
    std::vector<std::string> missing;
    std::vector<bool> used(header.size(), false);
    for (auto& col : plan) {
        const auto key = normalize_key(col.name);
        auto it = std::find_if(header.begin(), header.end(), [&](const auto& h) { return normalize_key(h) == key; });
        if (it == header.end()) {
            missing.push_back(col.name);
            continue;
        }
        col.source = static_cast<std::size_t>(it - header.begin());
        used[col.source] = true;
    }
    if (!missing.empty()) {
        std::string msg = "dataset " + to_string(dataset) + " is missing required column(s):";
        for (const auto& m : missing) msg += " '" + m + "'";
        throw SchemaError(msg);
    }

    RawTable table;
    table.dataset = dataset;
    for (const auto& col : plan) table.column_names.push_back(col.name);
    for (std::size_t i = 0; i < header.size(); ++i)
        if (!used[i]) table.dropped_columns.push_back(header[i]);
    if (!table.dropped_columns.empty()) {
        log_warn("dropping " + std::to_string(table.dropped_columns.size()) + " column(s) not in the " +
                 to_string(dataset) + " schema");
    }

    std::vector<std::string> record;
    while (reader.next(record)) {
        if (record.size() != header.size()) {
            ++table.rejected_rows;
            continue;
        }
        std::vector<Cell> row;
        row.reserve(plan.size());
        bool ok = true;
        for (const auto& col : plan) {
            const auto& text = record[col.source];
            if (col.numeric) {
                double v = 0.0;
                if (!parse_number(text, v)) {
                    ok = false;
                    break;
                }
                row.emplace_back(v);
            } else {
                row.emplace_back(std::string(trim_view(text)));
            }
        }
        if (ok) table.rows.push_back(std::move(row));
        else ++table.rejected_rows;
    }
    if (table.rejected_rows > 0) log_warn("rejected " + std::to_string(table.rejected_rows) + " unparseable row(s)");
    if (table.rows.empty()) throw SchemaError("dataset " + to_string(dataset) + " has no usable rows");
    return table;
}

RawTable encode_categoricals(const RawTable& table, const DatasetSchema& schema) {
    RawTable out = table;
    for (const auto& f : schema.features) {
        if (f.kind != ColumnKind::Categorical) continue;
        const std::size_t c = out.column_index(f.name);
        for (auto& row : out.rows) {
            if (const auto* text = std::get_if<std::string>(&row[c])) {
                const auto code = find_level(f.levels, *text);
                if (!code) throw EncodingError("column '" + f.name + "': undeclared level '" + *text + "'");
                row[c] = static_cast<double>(*code);
            }
        }
    }
    return out;
}

TargetLabels extract_target(const RawTable& table, const DatasetSchema& schema, std::string_view task_id) {
    const auto& target = schema.target(task_id);
    const std::size_t c = table.column_index(target.name);
    TargetLabels out;
    out.task_id = target.task_id;
    out.n_classes = target.n_classes();
    out.labels.reserve(table.row_count());
    for (const auto& row : table.rows) {
        int label = -1;
        if (const auto* text = std::get_if<std::string>(&row[c])) {
            if (auto code = find_level(target.levels, *text)) label = *code;
            else throw EncodingError("target '" + target.name + "': unmapped value '" + *text + "'");
        } else {
            const double v = std::get<double>(row[c]);
            if (v != std::floor(v) || v < 0 || v >= out.n_classes) {
                throw EncodingError("target '" + target.name + "': code " + std::to_string(v) + " out of range");
            }
            label = static_cast<int>(v);
        }
        out.labels.push_back(label);
    }
    out.class_counts = class_counts(out.labels, out.n_classes);
    return out;
}

FeatureMatrix build_feature_matrix(const RawTable& encoded, const DatasetSchema& schema, std::string_view active_task) {
    const auto& active = schema.target(active_task);
    const auto excluded = schema.feature_index(active.name);

    FeatureMatrix m;
    std::vector<std::size_t> sources;
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
        if (excluded && *excluded == f) continue;
        m.column_names.push_back(schema.features[f].name);
        sources.push_back(encoded.column_index(schema.features[f].name));
    }
    m.rows = encoded.row_count();
    m.cols = sources.size();
    m.values.reserve(m.rows * m.cols);
    for (const auto& row : encoded.rows)
        for (std::size_t s : sources) {
            const auto* v = std::get_if<double>(&row[s]);
            if (!v) throw EncodingError("column '" + encoded.column_names[s] + "' is not encoded");
            m.values.push_back(*v);
        }
    for (const auto& t : schema.targets) m.labels[t.task_id] = extract_target(encoded, schema, t.task_id).labels;
    return m;
}

std::vector<std::size_t> class_counts(std::span<const int> labels, int n_classes) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (int l : labels) {
        if (l < 0 || l >= n_classes) throw std::out_of_range("label " + std::to_string(l) + " outside [0, " + std::to_string(n_classes) + ")");
        ++counts[static_cast<std::size_t>(l)];
    }
    return counts;
}

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(items[i - 1], items[j]);
    }
}

std::vector<std::size_t> balance_classes(std::span<const int> labels, int n_classes, std::uint64_t seed) {
    const auto counts = class_counts(labels, n_classes);
    const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
    if (present < 2) throw std::invalid_argument("balance_classes: need at least 2 classes present");
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] == 0) throw std::invalid_argument("balance_classes: class " + std::to_string(k) + " has no samples");
    const std::size_t keep = *std::min_element(counts.begin(), counts.end());

    std::vector<std::vector<std::size_t>> by_class(counts.size());
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    std::vector<std::size_t> out;
    out.reserve(keep * counts.size());
    for (std::size_t k = 0; k < by_class.size(); ++k) {
        auto& idx = by_class[k];
        seeded_shuffle(idx, seed ^ (0x9E3779B97F4A7C15ULL * (k + 1)));
        out.insert(out.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::sort(out.begin(), out.end());
    return out;
}

StandardScaler fit_scaler(const FeatureMatrix& matrix, std::span<const std::size_t> rows) {
    if (rows.size() < 2) throw std::invalid_argument("fit_scaler: need at least 2 rows");
    StandardScaler s;
    s.columns.resize(matrix.cols);
    for (std::size_t c = 0; c < matrix.cols; ++c) {
        double mean = 0.0;
        for (std::size_t r : rows) mean += matrix.at(r, c);
        mean /= static_cast<double>(rows.size());
        double var = 0.0;
        for (std::size_t r : rows) {
            const double d = matrix.at(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(rows.size());
        const double sd = std::sqrt(var);
        if (!std::isfinite(mean) || !std::isfinite(sd)) {
            throw std::invalid_argument("fit_scaler: column '" +
                                        (c < matrix.column_names.size() ? matrix.column_names[c] : std::to_string(c)) +
                                        "' overflows double precision statistics");
        }
        s.columns[c] = {mean, sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 0.0};
    }
    return s;
}

FeatureMatrix apply_scaler(const FeatureMatrix& matrix, const StandardScaler& scaler) {
    if (scaler.columns.size() != matrix.cols) throw DimensionError("apply_scaler: scaler column count differs from matrix");
    FeatureMatrix out = matrix;
    out.scaler = scaler;
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c) {
            const auto& col = scaler.columns[c];
            double& v = out.values[r * out.cols + c];
            v = col.std > 0.0 ? (v - col.mean) / col.std : 0.0;
        }
    return out;
}

FeatureMatrix standard_scale(const FeatureMatrix& matrix) {
    std::vector<std::size_t> all(matrix.rows);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return apply_scaler(matrix, fit_scaler(matrix, all));
}

WindowSet window_partition(std::size_t n_samples, std::size_t window_size) {
    if (window_size < 2) throw std::invalid_argument("window_partition: window size must be at least 2");
    if (window_size > n_samples) {
        throw std::invalid_argument("window_partition: window size " + std::to_string(window_size) + " exceeds " +
                                    std::to_string(n_samples) + " samples");
    }
    WindowSet ws;
    ws.window_size = window_size;
    const std::size_t full = n_samples / window_size;
    for (std::size_t w = 0; w < full; ++w) ws.windows.push_back({w * window_size, (w + 1) * window_size});
    ws.dropped_rows = n_samples - full * window_size;
    return ws;
}

}  // namespace sagechain
