// SPDX-License-Identifier: Apache-2.0
#include "tca/head_config_table.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "tca/error.hpp"

namespace tca {

using json = nlohmann::ordered_json;

std::string to_string(const HeadKey& key) {
    return "layer " + std::to_string(key.layer) + " head " + std::to_string(key.head);
}

const HeadEntry& HeadConfigTable::at(const HeadKey& key) const {
    const auto it = entries.find(key);
    if (it == entries.end()) {
        throw ConfigError("head configuration table has no entry for " + to_string(key));
    }
    return it->second;
}

SelectionParams HeadConfigTable::selection_params() const {
    return SelectionParams{metadata.block_size, metadata.window, metadata.alpha, metadata.index};
}

namespace {

json config_to_json(const SparsityConfig& cfg) {
    json j;
    j["block_size"] = cfg.block_size;
    j["mu"] = cfg.mu ? json(*cfg.mu) : json(nullptr);
    j["sigma"] = cfg.sigma ? json(*cfg.sigma) : json(nullptr);
    j["p"] = cfg.probabilities;
    return j;
}

SparsityConfig config_from_json(const json& j) {
    SparsityConfig cfg;
    cfg.block_size = j.at("block_size").get<std::size_t>();
    cfg.probabilities = j.at("p").get<std::vector<double>>();
    if (!j.at("mu").is_null()) cfg.mu = j.at("mu").get<double>();
    if (!j.at("sigma").is_null()) cfg.sigma = j.at("sigma").get<double>();
    cfg.validate();
    return cfg;
}

}  // namespace

std::string serialize_table(const HeadConfigTable& table) {
    const auto& m = table.metadata;
    json root;
    root["format_version"] = HeadConfigTable::kFormatVersion;
    root["metadata"] = {
        {"b", m.block_size},      {"w", m.window},
        {"tau", m.tau},           {"sigma", m.sigma},
        {"M", m.candidates},      {"alpha", m.alpha},
        {"index", std::string(to_string(m.index))},
        {"seed", m.seed},         {"created_at", m.created_at},
    };
    json entries = json::array();
    for (const auto& [key, e] : table.entries) {
        entries.push_back({
            {"layer", key.layer},
            {"head", key.head},
            {"chosen", config_to_json(e.chosen)},
            {"aggregated_score", e.aggregated_score},
            {"kept_count", e.kept_count},
            {"candidate_index", e.candidate_index},
            {"fallback", e.fallback},
        });
    }
    root["entries"] = std::move(entries);
    return root.dump(2) + "\n";
}

HeadConfigTable parse_table(const std::string& text) {
    try {
        const json root = json::parse(text);
        const int version = root.at("format_version").get<int>();
        if (version != HeadConfigTable::kFormatVersion) {
            throw IoError("unsupported head config table format_version " +
                          std::to_string(version));
        }
        HeadConfigTable table;
        const auto& m = root.at("metadata");
        auto& md = table.metadata;
        md.block_size = m.at("b").get<std::size_t>();
        md.window = m.at("w").get<std::size_t>();
        md.tau = m.at("tau").get<double>();
        md.sigma = m.at("sigma").get<double>();
        md.candidates = m.at("M").get<std::size_t>();
        md.alpha = m.at("alpha").get<double>();
        md.index = parse_redundancy_index(m.at("index").get<std::string>());
        md.seed = m.at("seed").get<std::uint64_t>();
        md.created_at = m.at("created_at").get<std::string>();
        for (const auto& e : root.at("entries")) {
            HeadKey key{e.at("layer").get<std::size_t>(), e.at("head").get<std::size_t>()};
            HeadEntry entry{config_from_json(e.at("chosen")),
                            e.at("aggregated_score").get<double>(),
                            e.at("kept_count").get<std::size_t>(),
                            e.at("candidate_index").get<std::size_t>(),
                            e.at("fallback").get<bool>()};
            if (!table.entries.emplace(key, std::move(entry)).second) {
                throw IoError("duplicate table entry for " + to_string(key));
            }
        }
        return table;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed head config table: ") + e.what());
    } catch (const ParameterError& e) {
        throw IoError(std::string("invalid head config table: ") + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return buf.str();
}

void write_table(const std::filesystem::path& path, const HeadConfigTable& table) {
    write_file_atomic(path, serialize_table(table));
}

HeadConfigTable read_table(const std::filesystem::path& path) {
    try {
        return parse_table(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace tca
