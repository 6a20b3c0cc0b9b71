// SPDX-License-Identifier: Apache-2.0
#include <filesystem>

#include <gtest/gtest.h>
#include <json.hpp>

#include "tca/cost_model.hpp"
#include "tca/engine.hpp"
#include "tca/error.hpp"
#include "tca/report.hpp"
#include "tca/workload.hpp"

namespace tca {
namespace {

TEST(CostModel, DenseRetentionCostsExactlyFull) {
    const std::vector<std::size_t> r{1024 - 256, 1024 - 256};
    const auto c = cost_model(1024, 64, 2, r, 256, 128);
    EXPECT_EQ(c.sparse_flops, c.full_flops);
    EXPECT_EQ(c.flop_ratio_before_overhead(), 1.0);
    EXPECT_EQ(c.kv_ratio(), 1.0);
    EXPECT_EQ(c.retained_fraction, 1.0);
}

TEST(CostModel, HandComputedRatios) {
    const std::vector<std::size_t> r{64};
    const auto c = cost_model(1024, 64, 1, r, 128, 64);
    EXPECT_EQ(c.full_flops, 4ULL * 1024 * 1024 * 64);
    EXPECT_EQ(c.sparse_flops, 4ULL * 1024 * 192 * 64);
    EXPECT_EQ(c.overhead_flops, 2ULL * 1024 * 64 + 8ULL * 1024);
    EXPECT_DOUBLE_EQ(c.flop_ratio_before_overhead(), 0.1875);
    EXPECT_DOUBLE_EQ(c.flop_ratio(), 0.1875 + (2.0 * 64 + 8) / (4.0 * 1024 * 64));
    EXPECT_EQ(c.kv_bytes_full, 4ULL * 2 * 1024 * 64);
    EXPECT_EQ(c.kv_bytes_sparse, 4ULL * 2 * 192 * 64);
    EXPECT_EQ(c.kv_ratio(), c.retained_fraction);
}

TEST(CostModel, ShortSequenceHasNoOverheadAndClampsWindow) {
    const std::vector<std::size_t> r{0};
    const auto c = cost_model(100, 8, 1, r, 4096, 16);
    EXPECT_EQ(c.overhead_flops, 0u);
    EXPECT_EQ(c.flop_ratio(), 1.0);
}

TEST(CostModel, KvRatioEqualsRetainedFractionAcrossHeads) {
    for (std::size_t a : {0u, 17u, 300u})
        for (std::size_t b : {5u, 700u}) {
            const std::vector<std::size_t> r{a, b};
            const auto c = cost_model(2048, 32, 2, r, 512, 64);
            EXPECT_EQ(c.kv_ratio(), c.retained_fraction);
            EXPECT_EQ(c.retained_fraction, static_cast<double>(a + b + 1024) / 4096.0);
        }
}

TEST(CostModel, RejectsBadInput) {
    const std::vector<std::size_t> one{1};
    EXPECT_THROW(cost_model(0, 8, 1, one, 4, 4), ParameterError);
    EXPECT_THROW(cost_model(64, 8, 1, one, 4, 6), ParameterError);
    EXPECT_THROW(cost_model(64, 8, 2, one, 4, 4), ParameterError);
    const std::vector<std::size_t> big{61};
    EXPECT_THROW(cost_model(64, 8, 1, big, 4, 4), ParameterError);
}

TEST(MeasuredFlops, PrefillCounterMatchesAnalyticModel) {
    for (std::size_t L : {48u, 200u, 333u}) {
        const auto inp = generate_pattern({PatternFamily::attention_sink, L, 16, Seed{L}, 0.9});
        const SelectionParams p{16, 64, 0.5, RedundancyIndex::hhi};
        const auto out = prefill(inp, make_config(16, 1.5, 1.0), p);
        const std::size_t w = std::min<std::size_t>(64, L);
        const std::vector<std::size_t> retained{out.selection.kept().size() - w};
        const auto c = cost_model(L, 16, 1, retained, 64, 16);
        EXPECT_EQ(out.flops.attention_flops, c.sparse_flops) << L;
        EXPECT_EQ(out.flops.overhead_flops, c.overhead_flops) << L;
        // One extra query-key product per query whose own position was not kept.
        std::size_t unkept = 0;
        for (std::size_t i = 0; i < L; ++i) unkept += out.selection.kept().contains(i) ? 0 : 1;
        EXPECT_EQ(out.flops.self_token_flops, 4ULL * unkept * 16);
    }
}

RunReport sample_report() {
    RunReport r;
    r.config = {{"block", "16"}, {"window", "64"}};
    r.heads.push_back({{0, 1}, 256, 40, 64, 3, 104.0 / 256.0});
    const std::vector<std::size_t> retained{40};
    r.cost = cost_model(256, 16, 1, retained, 64, 16);
    r.measured.attention_flops = r.cost.sparse_flops;
    r.decode_steps = 10;
    r.final_cache_size = 110;
    return r;
}

TEST(Report, RenderingIsDeterministicInEveryFormat) {
    const auto r = sample_report();
    for (auto f : {ReportFormat::text, ReportFormat::csv, ReportFormat::json}) {
        EXPECT_EQ(render_report(r, f), render_report(sample_report(), f));
        EXPECT_EQ(parse_report_format(to_string(f)), f);
    }
    EXPECT_THROW(parse_report_format("yaml"), ParameterError);
}

TEST(Report, JsonCarriesCostAndOmitsEmptySections) {
    auto r = sample_report();
    const auto j = nlohmann::json::parse(render_report(r, ReportFormat::json));
    EXPECT_EQ(j["cost"]["sparse_flops"].get<std::uint64_t>(), r.cost.sparse_flops);
    EXPECT_DOUBLE_EQ(j["cost"]["flop_ratio"].get<double>(), r.cost.flop_ratio());
    EXPECT_FALSE(j.contains("bounds"));
    EXPECT_FALSE(j.contains("timing"));
    r.bounds = BoundSummary{};
    r.bounds->checked = 7;
    r.session_seconds = 0.5;
    const auto k = nlohmann::json::parse(render_report(r, ReportFormat::json));
    EXPECT_EQ(k["bounds"]["checked"].get<std::size_t>(), 7u);
    EXPECT_TRUE(k.contains("timing"));
}

TEST(Report, CsvHasHeaderAndFiveColumns) {
    const auto csv = render_report(sample_report(), ReportFormat::csv);
    EXPECT_EQ(csv.rfind(std::string(kReportCsvHeader) + "\n", 0), 0u);
    std::size_t start = 0;
    while (start < csv.size()) {
        const auto end = csv.find('\n', start);
        const auto line = csv.substr(start, end - start);
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4) << line;
        start = end + 1;
    }
    EXPECT_NE(csv.find("head,0,1,global_count,40"), std::string::npos);
}

TEST(Report, EmitWritesFileAndReportsBadPath) {
    const auto path = std::filesystem::temp_directory_path() / "tca_report_test.json";
    emit_report(sample_report(), ReportFormat::json, path);
    EXPECT_TRUE(std::filesystem::exists(path));
    std::filesystem::remove(path);
    EXPECT_THROW(emit_report(sample_report(), ReportFormat::json, "/nonexistent/dir/r.json"), IoError);
}

}  // namespace
}  // namespace tca
