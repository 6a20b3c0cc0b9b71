// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tca/cost_model.hpp"
#include "tca/flop_counter.hpp"
#include "tca/session.hpp"
#include "tca/theory.hpp"

namespace tca {

enum class ReportFormat { text, csv, json };

std::string_view to_string(ReportFormat format) noexcept;
ReportFormat parse_report_format(std::string_view name);

/// Summary of one `run`: configuration echo, per-head retention, analytic
/// cost, the engine's measured counters and, optionally, bound results and
/// wall-clock timings.
struct RunReport {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<HeadSummary> heads;
    CostModel cost;
    FlopCounter measured;
    std::size_t decode_steps = 0;
    std::size_t final_cache_size = 0;
    std::optional<BoundSummary> bounds;
    /// Wall-clock seconds of the whole session; left empty for reproducible output.
    std::optional<double> session_seconds;
};

/// Columns of the csv form: section,layer,head,metric,value.
/// `section` is one of config, head, cost, measured, session, bounds, timing;
/// layer and head are empty outside the head section.
inline constexpr std::string_view kReportCsvHeader = "section,layer,head,metric,value";

/// Deterministic: identical reports render to identical bytes.
std::string render_report(const RunReport& report, ReportFormat format);

/// Renders and writes atomically. Throws IoError naming the path on failure.
void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace tca
