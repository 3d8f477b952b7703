#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sagechain {

enum class DatasetId { DataCo, Shipping, SmartLogistics };

enum class ColumnKind { Numeral, Digit, Categorical };

struct FeatureColumn {
    std::string name;
    ColumnKind kind = ColumnKind::Numeral;
    // Declared levels for categorical columns; index = integer code.
    std::vector<std::string> levels;

    bool operator==(const FeatureColumn&) const = default;
};

struct TargetColumn {
    std::string task_id;
    std::string name;
    std::vector<std::string> levels;

    int n_classes() const { return static_cast<int>(levels.size()); }
    bool operator==(const TargetColumn&) const = default;
};

struct DatasetSchema {
    DatasetId id = DatasetId::DataCo;
    std::vector<FeatureColumn> features;
    std::vector<TargetColumn> targets;

    const TargetColumn& target(std::string_view task_id) const;
    bool has_task(std::string_view task_id) const;
    // Index of the feature column with the same normalized name, if any.
    std::optional<std::size_t> feature_index(std::string_view column_name) const;
    std::vector<std::string> task_ids() const;

    bool operator==(const DatasetSchema&) const = default;
};

// Built-in layouts for the three supported datasets.
const DatasetSchema& builtin_schema(DatasetId id);

std::string to_string(DatasetId id);
DatasetId parse_dataset_id(std::string_view text);
// Default CSV file name for each dataset under a data directory.
std::string default_file_name(DatasetId id);

// Lower-cases and strips every non-alphanumeric character, so "Order_Status",
// "order status" and "ORDER-STATUS" compare equal.
std::string normalize_key(std::string_view text);

// Integer code of `text` among `levels` (compared by normalize_key).
std::optional<int> find_level(const std::vector<std::string>& levels, std::string_view text);

// Schema config grammar (one directive per line, '#' starts a comment):
//   [dataset-id]
//   feature = <column name> | numeral
//   feature = <column name> | digit
//   feature = <column name> | categorical | level0, level1, ...
//   target  = <task id> | <column name> | level0, level1, ...
std::vector<DatasetSchema> parse_schema_config(std::string_view text);
std::string render_schema_config(const std::vector<DatasetSchema>& schemas);

}  // namespace sagechain
