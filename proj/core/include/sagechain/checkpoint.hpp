#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sagechain/adam.hpp"
#include "sagechain/tensor.hpp"

namespace sagechain {

struct NamedParameter {
    std::string name;
    std::string group;
    Tensor value;
};

using ParameterList = std::vector<NamedParameter>;

// Writes `<stem>.bin` (little-endian f64 blobs: parameters in list order, then
// Adam first/second moments per parameter when an optimizer is given) and
// `<stem>.json` (manifest with names, shapes, offsets and optimizer state).
// `metadata_json` must be a JSON object; it is embedded as "model".
void save_checkpoint(const std::filesystem::path& stem, const ParameterList& params, const Adam* optimizer,
                     const std::string& metadata_json = "{}");

// Restores values (and optimizer moments when given) into tensors whose names
// and shapes match the manifest. Throws SchemaError on any mismatch.
void load_checkpoint(const std::filesystem::path& stem, ParameterList& params, Adam* optimizer = nullptr);

// Metadata object stored by save_checkpoint, serialized back to JSON text.
std::string read_checkpoint_metadata(const std::filesystem::path& stem);

}  // namespace sagechain
