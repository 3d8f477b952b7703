#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sagechain/dataset.hpp"

namespace sagechain::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitTraining = 3;

// Runs the `sagechain` command line. Output goes to `out`, diagnostics to
// `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flat `key = value` config: '#' comments, blank lines ignored, keys unique.
std::map<std::string, std::string> parse_config_text(std::string_view text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Binary cache of an encoded table, ending in an FNV-1a checksum of the
// preceding bytes.
struct CacheInfo {
    std::uint64_t checksum = 0;
    std::size_t bytes = 0;
};

CacheInfo write_cache(const std::filesystem::path& path, const RawTable& encoded);
RawTable read_cache(const std::filesystem::path& path);
std::string serialize_cache(const RawTable& encoded);
RawTable deserialize_cache(std::string_view bytes);
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace sagechain::cli
