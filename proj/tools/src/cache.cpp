#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sagechain/error.hpp"
#include "sagechain_cli/cli.hpp"

namespace sagechain::cli {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'C', 'H', 'C', 'A', 'C', '1'};

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_string(std::string& out, const std::string& s) {
    put_u64(out, s.size());
    out += s;
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
        pos_ += 8;
        return v;
    }
    char byte() {
        need(1);
        return bytes_[pos_++];
    }
    std::string str() {
        const auto n = u64();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    void need(std::uint64_t n) const {
        if (n > bytes_.size() - pos_) throw SchemaError("cache file is truncated");
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

// Layout: magic, dataset id, column count, names, row count, then per cell a
// tag byte (0 number, 1 text) and its payload; checksum last.
std::string serialize_cache(const RawTable& t) {
    std::string out(kMagic, sizeof kMagic);
    put_u64(out, static_cast<std::uint64_t>(t.dataset));
    put_u64(out, t.column_names.size());
    for (const auto& n : t.column_names) put_string(out, n);
    put_u64(out, t.rows.size());
    for (const auto& row : t.rows) {
        if (row.size() != t.column_names.size()) throw DimensionError("cache: row arity differs from header");
        for (const auto& cell : row) {
            if (const auto* d = std::get_if<double>(&cell)) {
                out.push_back(0);
                put_u64(out, std::bit_cast<std::uint64_t>(*d));
            } else {
                out.push_back(1);
                put_string(out, std::get<std::string>(cell));
            }
        }
    }
    put_u64(out, fnv1a(out));
    return out;
}

RawTable deserialize_cache(std::string_view bytes) {
    if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw SchemaError("not a sagechain cache file");
    }
    const auto body = bytes.substr(0, bytes.size() - 8);
    Reader tail(bytes.substr(bytes.size() - 8));
    if (tail.u64() != fnv1a(body)) throw SchemaError("cache checksum mismatch");
    Reader r(body.substr(sizeof kMagic));
    RawTable t;
    const auto id = r.u64();
    if (id > static_cast<std::uint64_t>(DatasetId::SmartLogistics)) throw SchemaError("cache: unknown dataset id");
    t.dataset = static_cast<DatasetId>(id);
    const auto cols = r.u64();
    for (std::uint64_t c = 0; c < cols; ++c) t.column_names.push_back(r.str());
    const auto rows = r.u64();
    for (std::uint64_t i = 0; i < rows; ++i) {
        std::vector<Cell> row;
        row.reserve(cols);
        for (std::uint64_t c = 0; c < cols; ++c) {
            const char tag = r.byte();
            if (tag == 0) row.emplace_back(std::bit_cast<double>(r.u64()));
            else if (tag == 1) row.emplace_back(r.str());
            else throw SchemaError("cache: bad cell tag");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

CacheInfo write_cache(const std::filesystem::path& path, const RawTable& encoded) {
    const auto bytes = serialize_cache(encoded);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write cache " + path.string());
    return {fnv1a(std::string_view(bytes).substr(0, bytes.size() - 8)), bytes.size()};
}

RawTable read_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open cache file " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return deserialize_cache(s.str());
}

}  // namespace sagechain::cli
