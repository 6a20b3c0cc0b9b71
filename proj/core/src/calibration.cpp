// SPDX-License-Identifier: Apache-2.0
#include "tca/calibration.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "tca/error.hpp"
#include "tca/parallel.hpp"

namespace tca {

void CalibrationSample::validate(std::size_t block_size) const {
    inputs.validate();
    if (inputs.length() < 2 * block_size) {
        throw ParameterError("calibration sample '" + label + "' has L = " +
                             std::to_string(inputs.length()) + ", need at least 2b = " +
                             std::to_string(2 * block_size));
    }
}

void CalibrationParams::validate() const {
    selection.validate();
    if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("tau must lie in [0, 1]");
}

namespace {

std::vector<std::size_t> supports(std::size_t length, Causal causal) {
    std::vector<std::size_t> s(length, length);
    if (causal == Causal::on) {
        for (std::size_t k = 0; k < length; ++k) s[k] = length - k;
    }
    return s;
}

}  // namespace

ColumnMass column_mass(const AttentionInputs& inp, Causal causal) {
    inp.validate();
    const std::size_t length = inp.length();
    ColumnMass out{std::vector<double>(length, 0.0), supports(length, causal)};
    for (std::size_t i = 0; i < length; ++i) {
        const auto row = attention_probabilities_row(inp, i, causal);
        const std::size_t visible = causal == Causal::on ? i + 1 : length;
        for (std::size_t k = 0; k < visible; ++k) out.column_sum[k] += row[k];
    }
    return out;
}

ColumnMass column_mass(const Tensor2D& scores, Causal causal) {
    if (scores.rows() != scores.cols()) throw ShapeError("column_mass: score matrix must be square");
    const std::size_t length = scores.rows();
    ColumnMass out{std::vector<double>(length, 0.0), supports(length, causal)};
    for (std::size_t i = 0; i < length; ++i) {
        const std::size_t visible = causal == Causal::on ? i + 1 : length;
        for (std::size_t k = 0; k < visible; ++k) out.column_sum[k] += scores(i, k);
    }
    return out;
}

double aggregated_score(const ColumnMass& mass, const TokenIndexSet& kept) {
    double a = 0.0;
    for (std::size_t k : kept) {
        if (k >= mass.column_sum.size()) throw ContractViolation("kept column out of range");
        a += mass.mean(k);
    }
    return a;
}

double aggregated_score(const Tensor2D& scores, const TokenIndexSet& kept, Causal causal) {
    return aggregated_score(column_mass(scores, causal), kept);
}

namespace {

struct SampleScore {
    double score;
    std::size_t kept;
};

std::vector<SampleScore> score_candidates(const CalibrationSample& sample,
                                          const CandidateSet& candidates,
                                          const CalibrationParams& params) {
    sample.validate(params.selection.block_size);
    const auto mass = column_mass(sample.inputs, Causal::on);
    std::vector<SampleScore> out;
    out.reserve(candidates.size());
    for (const auto& cfg : candidates.configs) {
        const auto kept = select_core_tokens(sample.inputs, cfg, params.selection).kept();
        out.push_back({aggregated_score(mass, kept), kept.size()});
    }
    return out;
}

}  // namespace

HeadCalibration calibrate_head(const CalibrationSample& sample, const CandidateSet& candidates,
                               const CalibrationParams& params) {
    return calibrate_head(std::span<const CalibrationSample>(&sample, 1), candidates, params);
}

HeadCalibration calibrate_head(std::span<const CalibrationSample> samples,
                               const CandidateSet& candidates, const CalibrationParams& params) {
    params.validate();
    if (candidates.size() == 0) throw ParameterError("candidate set is empty");
    if (samples.empty()) throw ParameterError("calibration needs at least one sample per head");
    for (const auto& cfg : candidates.configs) {
        if (cfg.block_size != params.selection.block_size) {
            throw ParameterError("candidate block size differs from selection block size");
        }
    }

    CalibrationReport report;
    report.tau = params.tau;
    report.candidates.resize(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto& rec = report.candidates[i];
        rec.candidate_index = i + 1;
        rec.aggregated_score = std::numeric_limits<double>::infinity();
        rec.valid = true;
    }
    for (const auto& sample : samples) {
        const auto scored = score_candidates(sample, candidates, params);
        for (std::size_t i = 0; i < scored.size(); ++i) {
            auto& rec = report.candidates[i];
            rec.aggregated_score = std::min(rec.aggregated_score, scored[i].score);
            rec.kept_count = std::max(rec.kept_count, scored[i].kept);
            rec.valid = rec.valid && scored[i].score >= params.tau;
        }
    }

    std::size_t best = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& rec = report.candidates[i];
        if (!rec.valid) continue;
        if (best == candidates.size() || rec.kept_count < report.candidates[best].kept_count) {
            best = i;
        }
    }
    if (best == candidates.size()) {
        best = candidates.size() - 1;
        report.fallback = true;
    }
    report.chosen_index = best + 1;
    return {candidates[best], std::move(report)};
}

ModelCalibration calibrate_model(const std::map<HeadKey, std::vector<CalibrationSample>>& samples,
                                 const CandidateSet& candidates, const CalibrationParams& params,
                                 TableMetadata metadata, std::size_t jobs) {
    params.validate();
    std::vector<HeadKey> keys;
    keys.reserve(samples.size());
    for (const auto& [key, _] : samples) keys.push_back(key);

    std::vector<HeadCalibration> results(keys.size());
    parallel_for(keys.size(), jobs, [&](std::size_t i) {
        results[i] = calibrate_head(samples.at(keys[i]), candidates, params);
    });

    ModelCalibration out;
    metadata.block_size = params.selection.block_size;
    metadata.window = params.selection.window;
    metadata.alpha = params.selection.alpha;
    metadata.index = params.selection.index;
    metadata.tau = params.tau;
    metadata.candidates = candidates.size();
    out.table.metadata = std::move(metadata);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto& report = results[i].report;
        const auto& rec = report.candidates[report.chosen_index - 1];
        out.table.entries[keys[i]] = HeadEntry{results[i].chosen, rec.aggregated_score,
                                               rec.kept_count, report.chosen_index,
                                               report.fallback};
        out.reports[keys[i]] = report;
    }
    return out;
}

}  // namespace tca
