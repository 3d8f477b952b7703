#include "sagechain/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>

#include <json.hpp>

#include "sagechain/error.hpp"

namespace sagechain {

namespace {

using json = nlohmann::json;

void put_f64(std::ostream& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
}

double get_f64(const std::vector<unsigned char>& blob, std::size_t index) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(blob[index * 8 + i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
    auto p = stem;
    p += ext;
    return p;
}

json read_manifest(const std::filesystem::path& stem) {
    std::ifstream in(with_ext(stem, ".json"));
    if (!in) throw SchemaError("cannot open checkpoint manifest " + with_ext(stem, ".json").string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError("malformed checkpoint manifest: " + std::string(e.what()));
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, const ParameterList& params, const Adam* optimizer,
                     const std::string& metadata_json) {
    json manifest;
    manifest["format"] = "sagechain-checkpoint";
    manifest["version"] = 1;
    manifest["byte_order"] = "little";
    manifest["dtype"] = "f64";
    manifest["model"] = json::parse(metadata_json);

    std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write checkpoint " + with_ext(stem, ".bin").string());

    std::size_t offset = 0;
    json entries = json::array();
    for (const auto& p : params) {
        for (double v : p.value.data()) put_f64(bin, v);
        entries.push_back({{"name", p.name},
                           {"group", p.group},
                           {"shape", p.value.shape()},
                           {"offset", offset},
                           {"count", p.value.size()}});
        offset += p.value.size();
    }
    manifest["parameters"] = entries;

    if (optimizer) {
        // Moments are located by parameter identity, not group order.
        std::map<const detail::Node*, std::pair<const std::vector<double>*, const std::vector<double>*>> moments;
        json groups = json::array();
        for (const auto& g : optimizer->groups()) {
            for (std::size_t k = 0; k < g.params.size(); ++k) moments[g.params[k].node()] = {&g.m[k], &g.v[k]};
            groups.push_back({{"name", g.name},
                              {"lr", g.hyper.lr},
                              {"beta1", g.hyper.beta1},
                              {"beta2", g.hyper.beta2},
                              {"eps", g.hyper.eps},
                              {"weight_decay", g.hyper.weight_decay}});
        }
        json moment_entries = json::array();
        for (const auto& p : params) {
            auto it = moments.find(p.value.node());
            if (it == moments.end()) continue;
            moment_entries.push_back({{"name", p.name}, {"m_offset", offset}, {"v_offset", offset + p.value.size()}});
            for (double v : *it->second.first) put_f64(bin, v);
            for (double v : *it->second.second) put_f64(bin, v);
            offset += 2 * p.value.size();
        }
        manifest["optimizer"] = {{"kind", "adam"}, {"steps", optimizer->steps()}, {"groups", groups},
                                 {"moments", moment_entries}};
    }
    manifest["total_values"] = offset;

    std::ofstream js(with_ext(stem, ".json"));
    if (!js) throw std::runtime_error("cannot write checkpoint manifest " + with_ext(stem, ".json").string());
    js << manifest.dump(2) << '\n';
}

void load_checkpoint(const std::filesystem::path& stem, ParameterList& params, Adam* optimizer) {
    const json manifest = read_manifest(stem);
    std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
    if (!bin) throw SchemaError("cannot open checkpoint blob " + with_ext(stem, ".bin").string());
    std::vector<unsigned char> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    const std::size_t total = manifest.at("total_values").get<std::size_t>();
    if (blob.size() != total * 8) throw SchemaError("checkpoint blob size does not match manifest");

    std::map<std::string, json> by_name;
    for (const auto& e : manifest.at("parameters")) by_name[e.at("name").get<std::string>()] = e;
    for (auto& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw SchemaError("checkpoint lacks parameter " + p.name);
        if (it->second.at("shape").get<Shape>() != p.value.shape()) {
            throw SchemaError("checkpoint shape mismatch for " + p.name);
        }
        const std::size_t off = it->second.at("offset").get<std::size_t>();
        auto dst = p.value.mutable_data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = get_f64(blob, off + i);
    }

    if (optimizer && manifest.contains("optimizer")) {
        const auto& opt = manifest.at("optimizer");
        optimizer->set_steps(opt.at("steps").get<std::uint64_t>());
        std::map<std::string, json> moments;
        for (const auto& e : opt.at("moments")) moments[e.at("name").get<std::string>()] = e;
        for (auto& g : optimizer->groups())
            for (std::size_t k = 0; k < g.params.size(); ++k)
                for (const auto& p : params) {
                    if (p.value.node() != g.params[k].node()) continue;
                    auto it = moments.find(p.name);
                    if (it == moments.end()) throw SchemaError("checkpoint lacks optimizer moments for " + p.name);
                    const std::size_t mo = it->second.at("m_offset").get<std::size_t>();
                    const std::size_t vo = it->second.at("v_offset").get<std::size_t>();
                    for (std::size_t i = 0; i < g.m[k].size(); ++i) {
                        g.m[k][i] = get_f64(blob, mo + i);
                        g.v[k][i] = get_f64(blob, vo + i);
                    }
                }
    }
}

std::string read_checkpoint_metadata(const std::filesystem::path& stem) {
    return read_manifest(stem).at("model").dump();
}

}  // namespace sagechain
