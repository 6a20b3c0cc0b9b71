// SPDX-License-Identifier: Apache-2.0
#include "tca/report.hpp"

#include <cstdio>

#include <json.hpp>

#include "tca/error.hpp"
#include "tca/head_config_table.hpp"

namespace tca {

std::string_view to_string(ReportFormat format) noexcept {
    switch (format) {
        case ReportFormat::text: return "text";
        case ReportFormat::csv: return "csv";
        case ReportFormat::json: return "json";
    }
    return "unknown";
}

ReportFormat parse_report_format(std::string_view name) {
    for (auto f : {ReportFormat::text, ReportFormat::csv, ReportFormat::json}) {
        if (to_string(f) == name) return f;
    }
    throw ParameterError("unknown report format '" + std::string(name) + "'");
}

namespace {

constexpr std::string_view kFlopNote =
    "FLOP ratio is the speed proxy: (sparse + overhead) / full attention FLOPs of one prefill";

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct Row {
    std::string section;
    std::string layer;
    std::string head;
    std::string metric;
    std::string value;
};

std::vector<Row> flatten(const RunReport& r) {
    std::vector<Row> rows;
    for (const auto& [k, v] : r.config) rows.push_back({"config", "", "", k, v});
    for (const auto& h : r.heads) {
        const auto layer = std::to_string(h.key.layer);
        const auto head = std::to_string(h.key.head);
        rows.push_back({"head", layer, head, "length", std::to_string(h.length)});
        rows.push_back({"head", layer, head, "global_count", std::to_string(h.global_count)});
        rows.push_back({"head", layer, head, "local_count", std::to_string(h.local_count)});
        rows.push_back({"head", layer, head, "decode_budget", std::to_string(h.decode_budget)});
        rows.push_back({"head", layer, head, "retained_fraction", num(h.retained_fraction)});
    }
    const auto& c = r.cost;
    rows.push_back({"cost", "", "", "full_flops", std::to_string(c.full_flops)});
    rows.push_back({"cost", "", "", "sparse_flops", std::to_string(c.sparse_flops)});
    rows.push_back({"cost", "", "", "overhead_flops", std::to_string(c.overhead_flops)});
    rows.push_back({"cost", "", "", "flop_ratio", num(c.flop_ratio())});
    rows.push_back({"cost", "", "", "kv_bytes_full", std::to_string(c.kv_bytes_full)});
    rows.push_back({"cost", "", "", "kv_bytes_sparse", std::to_string(c.kv_bytes_sparse)});
    rows.push_back({"cost", "", "", "retained_fraction", num(c.retained_fraction)});
    const auto& m = r.measured;
    rows.push_back({"measured", "", "", "attention_flops", std::to_string(m.attention_flops)});
    rows.push_back({"measured", "", "", "self_token_flops", std::to_string(m.self_token_flops)});
    rows.push_back({"measured", "", "", "overhead_flops", std::to_string(m.overhead_flops)});
    rows.push_back({"session", "", "", "decode_steps", std::to_string(r.decode_steps)});
    rows.push_back({"session", "", "", "final_cache_size", std::to_string(r.final_cache_size)});
    if (r.bounds) {
        const auto& b = *r.bounds;
        rows.push_back({"bounds", "", "", "checked", std::to_string(b.checked)});
        rows.push_back({"bounds", "", "", "tight_violations", std::to_string(b.tight_violations)});
        rows.push_back({"bounds", "", "", "identity_failures", std::to_string(b.identity_failures)});
        rows.push_back({"bounds", "", "", "loose_violations", std::to_string(b.loose_violations)});
        rows.push_back({"bounds", "", "", "sound_violations", std::to_string(b.sound_violations)});
        rows.push_back({"bounds", "", "", "tv_failures", std::to_string(b.tv_failures)});
        rows.push_back({"bounds", "", "", "max_gamma", num(b.max_gamma)});
        rows.push_back({"bounds", "", "", "max_violation", num(b.max_violation)});
    }
    if (r.session_seconds) {
        rows.push_back({"timing", "", "", "session_seconds", num(*r.session_seconds)});
    }
    return rows;
}

std::string render_csv(const RunReport& r) {
    std::string out(kReportCsvHeader);
    out += '\n';
    for (const auto& row : flatten(r)) {
        out += row.section + ',' + row.layer + ',' + row.head + ',' + row.metric + ',' + row.value;
        out += '\n';
    }
    return out;
}

std::string render_text(const RunReport& r) {
    std::string out = "# ";
    out += kFlopNote;
    out += '\n';
    std::string section;
    for (const auto& row : flatten(r)) {
        if (row.section != section) {
            section = row.section;
            out += "\n[" + section + "]\n";
        }
        out += "  ";
        if (!row.layer.empty()) out += "layer " + row.layer + " head " + row.head + "  ";
        out += row.metric + " = " + row.value + '\n';
    }
    return out;
}

std::string render_json(const RunReport& r) {
    nlohmann::ordered_json j;
    j["note"] = kFlopNote;
    auto config = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.config) config[k] = v;
    j["config"] = std::move(config);
    auto heads = nlohmann::ordered_json::array();
    for (const auto& h : r.heads) {
        heads.push_back({{"layer", h.key.layer},
                         {"head", h.key.head},
                         {"length", h.length},
                         {"global_count", h.global_count},
                         {"local_count", h.local_count},
                         {"decode_budget", h.decode_budget},
                         {"retained_fraction", h.retained_fraction}});
    }
    j["heads"] = std::move(heads);
    const auto& c = r.cost;
    j["cost"] = {{"full_flops", c.full_flops},
                 {"sparse_flops", c.sparse_flops},
                 {"overhead_flops", c.overhead_flops},
                 {"flop_ratio", c.flop_ratio()},
                 {"kv_bytes_full", c.kv_bytes_full},
                 {"kv_bytes_sparse", c.kv_bytes_sparse},
                 {"retained_fraction", c.retained_fraction}};
    j["measured"] = {{"attention_flops", r.measured.attention_flops},
                     {"self_token_flops", r.measured.self_token_flops},
                     {"overhead_flops", r.measured.overhead_flops}};
    j["session"] = {{"decode_steps", r.decode_steps}, {"final_cache_size", r.final_cache_size}};
    if (r.bounds) {
        const auto& b = *r.bounds;
        j["bounds"] = {{"checked", b.checked},
                       {"tight_violations", b.tight_violations},
                       {"identity_failures", b.identity_failures},
                       {"loose_violations", b.loose_violations},
                       {"sound_violations", b.sound_violations},
                       {"tv_failures", b.tv_failures},
                       {"max_gamma", b.max_gamma},
                       {"max_violation", b.max_violation}};
    }
    if (r.session_seconds) j["timing"] = {{"session_seconds", *r.session_seconds}};
    return j.dump(2) + "\n";
}

}  // namespace

std::string render_report(const RunReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::text: return render_text(report);
        case ReportFormat::csv: return render_csv(report);
        case ReportFormat::json: return render_json(report);
    }
    throw ParameterError("unknown report format");
}

void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path) {
    write_file_atomic(path, render_report(report, format));
}

}  // namespace tca
