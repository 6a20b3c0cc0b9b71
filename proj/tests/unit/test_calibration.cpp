// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tca/calibration.hpp"
#include "tca/error.hpp"
#include "tca/workload.hpp"

namespace tca {
namespace {

AttentionInputs seeded(std::size_t L, std::size_t d, std::uint64_t seed) {
    return {random_tensor(L, d, Seed{seed}, Distribution::gaussian),
            random_tensor(L, d, Seed{seed + 1}, Distribution::gaussian),
            random_tensor(L, d, Seed{seed + 2}, Distribution::gaussian)};
}

CalibrationParams params(std::size_t b, std::size_t w, double tau) {
    CalibrationParams p;
    p.selection = {b, w, 0.5, RedundancyIndex::hhi};
    p.tau = tau;
    return p;
}

TEST(AggregatedScore, TwoTokenUniformCausal) {
    const auto a = Tensor2D::from_rows({{1.0, 0.0}, {0.5, 0.5}});
    EXPECT_DOUBLE_EQ(aggregated_score(a, TokenIndexSet::all(2)), 1.25);
    EXPECT_EQ(aggregated_score(a, TokenIndexSet{}), 0.0);
}

TEST(AggregatedScore, FirstColumnUnderZeroQueryIsHarmonicMean) {
    for (std::size_t L : {1u, 5u, 40u}) {
        auto inp = seeded(L, 3, L);
        inp.q = Tensor2D(L, 3, 0.0);
        double harmonic = 0.0;
        for (std::size_t i = 1; i <= L; ++i) harmonic += 1.0 / static_cast<double>(i);
        const auto mass = column_mass(inp, Causal::on);
        EXPECT_NEAR(aggregated_score(mass, TokenIndexSet::range(0, 1)), harmonic / static_cast<double>(L), 1e-14);
    }
}

TEST(AggregatedScore, UniformFullCoverageClosedForm) {
    const std::size_t L = 300;
    auto inp = seeded(L, 2, 7);
    inp.q = Tensor2D(L, 2, 0.0);
    double closed = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
        double col = 0.0;
        for (std::size_t i = k; i < L; ++i) col += 1.0 / static_cast<double>(i + 1);
        closed += col / static_cast<double>(L - k);
    }
    EXPECT_NEAR(aggregated_score(column_mass(inp, Causal::on), TokenIndexSet::all(L)), closed, 1e-11);
}

TEST(AggregatedScore, StreamedColumnsMatchMatrixAndOracle) {
    const auto inp = seeded(64, 8, 3);
    const auto a = full_attention_scores(inp, Causal::on);
    const auto streamed = column_mass(inp, Causal::on);
    const auto matrix = column_mass(a, Causal::on);
    const auto kept = TokenIndexSet::from_sorted({0, 1, 7, 20, 33, 50, 63}, 64);
    const double want = oracle::aggregated_score(a, std::vector<std::size_t>(kept.begin(), kept.end()));
    EXPECT_NEAR(aggregated_score(streamed, kept), want, 1e-12);
    EXPECT_NEAR(aggregated_score(matrix, kept), want, 1e-12);
    for (std::size_t k = 0; k < 64; ++k) EXPECT_EQ(streamed.support[k], 64 - k);
}

TEST(AggregatedScore, MonotoneUnderKeptGrowth) {
    const auto inp = seeded(48, 4, 4);
    const auto mass = column_mass(inp, Causal::on);
    Rng rng(Seed{5});
    std::vector<std::size_t> kept;
    double prev = 0.0;
    for (std::size_t j = 0; j < 48; ++j) {
        if (rng.uniform01() < 0.5) continue;
        kept.push_back(j);
        const double now = aggregated_score(mass, TokenIndexSet::from_sorted(kept, 48));
        EXPECT_GE(now, prev);
        prev = now;
    }
}

TEST(CalibrateHead, ZeroThresholdPicksSparsest) {
    const CalibrationSample sample{seeded(256, 8, 6), "s"};
    const auto cands = generate_candidates(16, 6, 1.0);
    const auto result = calibrate_head(sample, cands, params(16, 32, 0.0));
    EXPECT_EQ(result.report.chosen_index, 1u);
    EXPECT_FALSE(result.report.fallback);
    EXPECT_EQ(result.chosen, cands[0]);
}

TEST(CalibrateHead, ReportContractHoldsAcrossThresholds) {
    const CalibrationSample sample{seeded(256, 8, 7), "s"};
    const auto cands = generate_candidates(16, 6, 1.0);
    for (double tau : {0.0, 0.3, 0.6, 0.9, 1.0}) {
        const auto result = calibrate_head(sample, cands, params(16, 32, tau));
        const auto& rep = result.report;
        ASSERT_EQ(rep.candidates.size(), 6u);
        for (const auto& c : rep.candidates) EXPECT_EQ(c.valid, c.aggregated_score >= tau);
        const auto& chosen = rep.candidates[rep.chosen_index - 1];
        if (rep.fallback) {
            EXPECT_EQ(rep.chosen_index, 6u);
            for (const auto& c : rep.candidates) EXPECT_FALSE(c.valid);
        } else {
            EXPECT_GE(chosen.aggregated_score, tau);
            for (const auto& c : rep.candidates) {
                if (!c.valid) continue;
                EXPECT_LE(chosen.kept_count, c.kept_count);
                if (c.kept_count == chosen.kept_count) EXPECT_LE(chosen.candidate_index, c.candidate_index);
            }
        }
    }
}

TEST(CalibrateHead, ScoresMatchIndependentRescoring) {
    const CalibrationSample sample{seeded(200, 8, 8), "s"};
    const auto cands = generate_candidates(16, 5, 1.0);
    const auto p = params(16, 24, 0.9);
    const auto result = calibrate_head(sample, cands, p);
    const auto a = oracle::scores(sample.inputs, true);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto kept = select_core_tokens(sample.inputs, cands[i], p.selection).kept();
        const auto& rec = result.report.candidates[i];
        EXPECT_EQ(rec.kept_count, kept.size());
        EXPECT_NEAR(rec.aggregated_score,
                    oracle::aggregated_score(a, std::vector<std::size_t>(kept.begin(), kept.end())), 1e-10);
    }
}

TEST(CalibrateHead, SinkNeedsSparserCandidateThanUniform) {
    const auto cands = generate_candidates(16, 8, 1.0);
    const auto p = params(16, 32, 0.9);
    const CalibrationSample sink{generate_pattern({PatternFamily::attention_sink, 512, 32, Seed{1}, 0.9}), "sink"};
    const CalibrationSample flat{generate_pattern({PatternFamily::uniform, 512, 32, Seed{1}, 0.9}), "uniform"};
    const auto rs = calibrate_head(sink, cands, p);
    const auto ru = calibrate_head(flat, cands, p);
    EXPECT_FALSE(rs.report.fallback);
    EXPECT_FALSE(ru.report.fallback);
    EXPECT_LT(rs.report.chosen_index, ru.report.chosen_index);
}

TEST(CalibrateHead, RejectsShortSampleAndBadTau) {
    const auto cands = generate_candidates(16, 4, 1.0);
    EXPECT_THROW(calibrate_head(CalibrationSample{seeded(31, 4, 9), "short"}, cands, params(16, 8, 0.9)),
                 ParameterError);
    EXPECT_THROW(calibrate_head(CalibrationSample{seeded(64, 4, 9), "x"}, cands, params(16, 8, 1.5)),
                 ParameterError);
}

TEST(CalibrateModel, SingleAndRepeatedSamplesAgreeWithHead) {
    const auto cands = generate_candidates(16, 6, 1.0);
    const auto p = params(16, 32, 0.9);
    const CalibrationSample s{seeded(256, 8, 10), "a"};
    const auto head = calibrate_head(s, cands, p);
    std::map<HeadKey, std::vector<CalibrationSample>> one{{{0, 0}, {s}}};
    std::map<HeadKey, std::vector<CalibrationSample>> two{{{0, 0}, {s, s}}};
    const auto m1 = calibrate_model(one, cands, p, {}, 1);
    const auto m2 = calibrate_model(two, cands, p, {}, 1);
    const auto& e1 = m1.table.at({0, 0});
    EXPECT_EQ(e1.chosen, head.chosen);
    EXPECT_EQ(e1.candidate_index, head.report.chosen_index);
    EXPECT_EQ(m1.table.entries, m2.table.entries);
}

TEST(CalibrateModel, AndValidityIsConservative) {
    const auto cands = generate_candidates(16, 8, 1.0);
    const auto p = params(16, 32, 0.9);
    const CalibrationSample sink{generate_pattern({PatternFamily::attention_sink, 512, 32, Seed{2}, 0.9}), "sink"};
    const CalibrationSample flat{generate_pattern({PatternFamily::uniform, 512, 32, Seed{2}, 0.9}), "uniform"};
    const auto ks = calibrate_head(sink, cands, p).report;
    const auto ku = calibrate_head(flat, cands, p).report;
    const std::vector<CalibrationSample> both{sink, flat};
    const auto kb = calibrate_head(both, cands, p).report;
    const auto kept = [](const CalibrationReport& r) { return r.candidates[r.chosen_index - 1].kept_count; };
    EXPECT_GE(kept(kb), kept(ks));
    EXPECT_GE(kept(kb), kept(ku));
}

TEST(CalibrateModel, IndependentOfJobCount) {
    const auto cands = generate_candidates(16, 6, 1.0);
    const auto p = params(16, 32, 0.9);
    std::map<HeadKey, std::vector<CalibrationSample>> samples;
    for (std::size_t h = 0; h < 6; ++h) {
        samples[{h / 3, h % 3}] = {CalibrationSample{seeded(192, 8, 20 + 3 * h), "h"}};
    }
    const auto a = calibrate_model(samples, cands, p, {}, 1);
    const auto b = calibrate_model(samples, cands, p, {}, 8);
    EXPECT_EQ(a.table, b.table);
    EXPECT_EQ(serialize_table(a.table), serialize_table(b.table));
}

TEST(HeadConfigTable, RoundTripAndErrors) {
    const auto cands = generate_candidates(16, 4, 1.0);
    const auto p = params(16, 32, 0.8);
    std::map<HeadKey, std::vector<CalibrationSample>> samples{{{1, 2}, {CalibrationSample{seeded(128, 4, 30), "x"}}}};
    TableMetadata meta;
    meta.seed = 42;
    meta.created_at = "2026-01-01T00:00:00Z";
    const auto model = calibrate_model(samples, cands, p, meta, 1);
    EXPECT_EQ(model.table.metadata.block_size, 16u);
    EXPECT_EQ(model.table.metadata.window, 32u);
    EXPECT_EQ(model.table.metadata.tau, 0.8);
    const auto text = serialize_table(model.table);
    EXPECT_NE(text.find("\"format_version\": 1"), std::string::npos);
    EXPECT_EQ(parse_table(text), model.table);

    const auto path = std::filesystem::temp_directory_path() / "tca_table_roundtrip.json";
    write_table(path, model.table);
    EXPECT_EQ(read_table(path), model.table);
    EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    std::filesystem::remove(path);

    EXPECT_THROW(model.table.at({0, 0}), ConfigError);
    auto bumped = text;
    bumped.replace(bumped.find("\"format_version\": 1"), 19, "\"format_version\": 2");
    EXPECT_THROW(parse_table(bumped), IoError);
    EXPECT_THROW(parse_table("{not json"), IoError);
    EXPECT_THROW(read_table("/nonexistent/dir/table.json"), IoError);
}

}  // namespace
}  // namespace tca
