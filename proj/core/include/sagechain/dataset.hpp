#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sagechain/schema.hpp"

namespace sagechain {

// Text until parsed or encoded, then a number.
using Cell = std::variant<std::string, double>;

struct RawTable {
    DatasetId dataset = DatasetId::DataCo;
    // Schema columns only, features first, then target-only columns.
    std::vector<std::string> column_names;
    std::vector<std::vector<Cell>> rows;
    std::size_t rejected_rows = 0;
    std::vector<std::string> dropped_columns;

    std::size_t row_count() const noexcept { return rows.size(); }
    std::size_t column_index(std::string_view name) const;
};

struct TargetLabels {
    std::string task_id;
    int n_classes = 0;
    std::vector<int> labels;
    std::vector<std::size_t> class_counts;
};

struct ColumnScaler {
    double mean = 0.0;
    double std = 1.0;
};

// Per-column standardization parameters; fit on training rows only.
struct StandardScaler {
    std::vector<ColumnScaler> columns;
    bool fitted() const noexcept { return !columns.empty(); }
};

struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major rows x cols
    std::vector<std::string> column_names;
    StandardScaler scaler;
    std::map<std::string, std::vector<int>> labels;  // task id -> per-row label

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
    // Copy holding only the given rows (labels follow).
    FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
};

struct WindowRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const WindowRange&) const = default;
};

struct WindowSet {
    std::size_t window_size = 20;
    std::vector<WindowRange> windows;
    std::size_t dropped_rows = 0;
};

RawTable load_dataset(const std::filesystem::path& path, DatasetId dataset);
RawTable load_dataset(std::istream& in, DatasetId dataset);

// Replaces categorical feature cells with integer codes. Target-only columns
// stay as text for extract_target.
RawTable encode_categoricals(const RawTable& table, const DatasetSchema& schema);

TargetLabels extract_target(const RawTable& table, const DatasetSchema& schema, std::string_view task_id);

// Feature matrix for `active_task`: numeric feature columns in schema order,
// minus the active task's own column when it is also a feature. Labels for
// every task are attached. Requires an encoded table.
FeatureMatrix build_feature_matrix(const RawTable& encoded, const DatasetSchema& schema, std::string_view active_task);

// Equal-count class subsample (seeded, uniform within class). Indices ascending.
std::vector<std::size_t> balance_classes(std::span<const int> labels, int n_classes, std::uint64_t seed);

StandardScaler fit_scaler(const FeatureMatrix& matrix, std::span<const std::size_t> rows);
FeatureMatrix apply_scaler(const FeatureMatrix& matrix, const StandardScaler& scaler);
// Fit on every row and transform.
FeatureMatrix standard_scale(const FeatureMatrix& matrix);

WindowSet window_partition(std::size_t n_samples, std::size_t window_size);

std::vector<std::size_t> class_counts(std::span<const int> labels, int n_classes);

// Fisher-Yates driven by raw engine output (platform-independent order).
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

}  // namespace sagechain
