// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tca/attention_oracle.hpp"
#include "tca/core_selection.hpp"
#include "tca/head_config_table.hpp"
#include "tca/sparsity_config.hpp"

namespace tca {

/// One calibration sequence for one head. Needs L >= 2b.
struct CalibrationSample {
    AttentionInputs inputs;
    std::string label;

    void validate(std::size_t block_size) const;
};

/// Column sums of a row-stochastic score matrix and the number of rows in
/// which each column is structurally present (L - k under a causal mask, L
/// otherwise). The mean column score is column_sum[k] / support[k].
struct ColumnMass {
    std::vector<double> column_sum;
    std::vector<std::size_t> support;

    double mean(std::size_t k) const {
        return support[k] == 0 ? 0.0 : column_sum[k] / static_cast<double>(support[k]);
    }
};

/// Builds ColumnMass from Q and K one query row at a time (O(L) memory).
ColumnMass column_mass(const AttentionInputs& inp, Causal causal);
ColumnMass column_mass(const Tensor2D& scores, Causal causal);

/// a = sum over kept columns k of (mean of column k over its support).
double aggregated_score(const ColumnMass& mass, const TokenIndexSet& kept);
double aggregated_score(const Tensor2D& scores, const TokenIndexSet& kept,
                        Causal causal = Causal::on);

struct CalibrationParams {
    SelectionParams selection;
    double tau = 0.9;

    void validate() const;
};

struct CandidateRecord {
    std::size_t candidate_index = 0;  // 1-based
    double aggregated_score = 0.0;
    std::size_t kept_count = 0;
    bool valid = false;
};

struct CalibrationReport {
    std::vector<CandidateRecord> candidates;
    std::size_t chosen_index = 0;  // 1-based
    bool fallback = false;
    double tau = 0.0;
    /// The scored set is global U tail U window, not the global set alone.
    bool scores_include_local = true;
};

struct HeadCalibration {
    SparsityConfig chosen;
    CalibrationReport report;
};

/// Scores every candidate by simulating online selection and keeps the one
/// with the fewest retained tokens among those reaching tau. Ties go to the
/// lower candidate index. If none is valid, the densest candidate is returned
/// and the report is flagged.
HeadCalibration calibrate_head(const CalibrationSample& sample, const CandidateSet& candidates,
                               const CalibrationParams& params);

/// Multi-sample variant: a candidate is valid only if it reaches tau on every
/// sample. Recorded score is the minimum and kept count the maximum across samples.
HeadCalibration calibrate_head(std::span<const CalibrationSample> samples,
                               const CandidateSet& candidates, const CalibrationParams& params);

struct ModelCalibration {
    HeadConfigTable table;
    std::map<HeadKey, CalibrationReport> reports;
};

/// Calibrates every head independently on up to `jobs` threads. Output does
/// not depend on `jobs`.
ModelCalibration calibrate_model(const std::map<HeadKey, std::vector<CalibrationSample>>& samples,
                                 const CandidateSet& candidates, const CalibrationParams& params,
                                 TableMetadata metadata, std::size_t jobs = 1);

}  // namespace tca
