// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tca/attention_oracle.hpp"
#include "tca/calibration.hpp"
#include "tca/head_config_table.hpp"

namespace tca {

/// Absolute slack allowed on the bound and on the proof identity.
inline constexpr double kBoundTolerance = 1e-9;

/// max |V_jk|
double v_infinity(const Tensor2D& v) noexcept;

struct QueryKeptSet {
    std::size_t query = 0;
    TokenIndexSet kept;
};

/// Per-query check of the single-query error bound as it is usually stated,
///   ||Att_i - Att~_i||_1 <= gamma (2 - gamma) ||V||_inf <= 2 gamma ||V||_inf,
/// together with the identity ||s - s~||_1 = gamma (2 - gamma) used to derive it.
///
/// Renormalizing over the kept set gives ||s - s~||_1 = 2 gamma exactly (the
/// kept part contributes gamma, the dropped part gamma), and the L1 norm over
/// d_h output coordinates can exceed ||s - s~||_1 ||V||_inf by up to d_h. The
/// record therefore also carries the sound forms:
///   ||s - s~||_1 = 2 gamma
///   max_c |Att_ic - Att~_ic| <= 2 gamma ||V||_inf
///   ||Att_i - Att~_i||_1     <= 2 gamma max_j ||V_j||_1
struct BoundRecord {
    std::size_t query = 0;
    double gamma = 0.0;
    double l1_error = 0.0;
    double loose_bound = 0.0;
    double tight_bound = 0.0;
    /// ||s~ (V - V~)||_1 with V~ zeroed outside the kept set; 0 up to rounding.
    double term2 = 0.0;
    /// ||s - s~||_1
    double prob_l1 = 0.0;
    /// | ||s - s~||_1 - gamma (2 - gamma) |
    double identity_residual = 0.0;
    bool holds_loose = false;
    bool holds_tight = false;

    /// | ||s - s~||_1 - 2 gamma |
    double tv_residual = 0.0;
    /// max_c |Att_ic - Att~_ic|
    double linf_error = 0.0;
    /// 2 gamma max_j ||V_j||_1
    double row_l1_bound = 0.0;
    /// linf_error <= loose_bound and l1_error <= row_l1_bound, both within tolerance.
    bool holds_sound = false;
};

struct BoundSummary {
    std::size_t checked = 0;
    std::size_t tight_violations = 0;
    std::size_t loose_violations = 0;
    std::size_t identity_failures = 0;
    double max_gamma = 0.0;
    /// max over queries of l1_error - tight_bound; <= 0 when the bound holds with room.
    double max_violation = 0.0;
    double max_identity_residual = 0.0;
    double max_term2 = 0.0;
    double v_inf = 0.0;

    std::size_t sound_violations = 0;
    std::size_t tv_failures = 0;
    double max_tv_residual = 0.0;

    /// Tight bound and gamma (2 - gamma) identity hold on every record.
    bool all_hold() const noexcept { return tight_violations == 0 && identity_failures == 0; }
    /// Loose bound on the L1 error holds on every record.
    bool loose_hold() const noexcept { return loose_violations == 0; }
    /// Sound bounds and the 2 gamma identity hold on every record.
    bool sound_hold() const noexcept { return sound_violations == 0 && tv_failures == 0; }
};

struct BoundReport {
    std::vector<BoundRecord> records;
    BoundSummary summary;
};

/// Measures gamma, the L1 error of the restricted attention and both bounds
/// for every (query, kept set) pair. Throws ContractViolation if a kept set
/// has nothing visible to its query.
BoundReport verify_bounds(const AttentionInputs& inp, std::span<const QueryKeptSet> pairs,
                          Causal causal);

/// Merges `other` into `into` (records appended, summary combined).
void merge_reports(BoundReport& into, const BoundReport& other);

/// Structured text (JSON) with the summary and all records.
std::string bound_report_json(const BoundReport& report);
/// One row per query: query,gamma,l1_error,loose_bound,tight_bound,term2,prob_l1,
/// identity_residual,holds_loose,holds_tight,tv_residual,linf_error,row_l1_bound,holds_sound
std::string bound_report_csv(const BoundReport& report);

/// Empirical relation between calibrated tau and per-query gamma.
struct GammaAudit {
    HeadKey key;
    double threshold = 0.0;  // 1 - tau
    std::size_t queries = 0;
    double fraction_within = 0.0;  // share of queries with gamma <= 1 - tau
    double min = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double p90 = 0.0;
    double max = 0.0;
};

/// For each head, replays online selection on its calibration samples with
/// the table's configuration and reports the distribution of gamma over all
/// queries. Observational only; tau bounds an aggregated column score, not
/// every query's gamma.
std::vector<GammaAudit> gamma_vs_tau_audit(
    const HeadConfigTable& table, const std::map<HeadKey, std::vector<CalibrationSample>>& samples);

}  // namespace tca
