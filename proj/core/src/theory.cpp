// SPDX-License-Identifier: Apache-2.0
#include "tca/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "tca/engine.hpp"
#include "tca/error.hpp"

namespace tca {

double v_infinity(const Tensor2D& v) noexcept { return max_abs(v); }

namespace {

std::vector<double> mix_rows(std::span<const double> weights, const Tensor2D& v) {
    std::vector<double> out(v.cols(), 0.0);
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (weights[j] == 0.0) continue;
        const auto row = v.row(j);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += weights[j] * row[c];
    }
    return out;
}

// || s~ (V - V~) ||_1 where V~ keeps only the kept rows of V.
double value_error_term(std::span<const double> restricted, const Tensor2D& v,
                        const TokenIndexSet& kept) {
    std::vector<double> acc(v.cols(), 0.0);
    for (std::size_t j = 0; j < restricted.size(); ++j) {
        const bool in = kept.contains(j);
        const auto row = v.row(j);
        for (std::size_t c = 0; c < acc.size(); ++c) {
            const double zeroed = in ? row[c] : 0.0;
            acc[c] += restricted[j] * (row[c] - zeroed);
        }
    }
    double total = 0.0;
    for (double x : acc) total += std::abs(x);
    return total;
}

void absorb(BoundSummary& s, const BoundRecord& r) {
    ++s.checked;
    if (!r.holds_tight) ++s.tight_violations;
    if (!r.holds_loose) ++s.loose_violations;
    if (r.identity_residual > kBoundTolerance) ++s.identity_failures;
    if (!r.holds_sound) ++s.sound_violations;
    if (r.tv_residual > kBoundTolerance) ++s.tv_failures;
    s.max_tv_residual = std::max(s.max_tv_residual, r.tv_residual);
    s.max_gamma = std::max(s.max_gamma, r.gamma);
    const double violation = r.l1_error - r.tight_bound;
    s.max_violation = s.checked == 1 ? violation : std::max(s.max_violation, violation);
    s.max_identity_residual = std::max(s.max_identity_residual, r.identity_residual);
    s.max_term2 = std::max(s.max_term2, r.term2);
}

}  // namespace

BoundReport verify_bounds(const AttentionInputs& inp, std::span<const QueryKeptSet> pairs,
                          Causal causal) {
    inp.validate();
    BoundReport report;
    report.summary.v_inf = v_infinity(inp.v);
    const double vinf = report.summary.v_inf;
    double max_row_l1 = 0.0;
    for (std::size_t j = 0; j < inp.v.rows(); ++j) {
        double row = 0.0;
        for (double x : inp.v.row(j)) row += std::abs(x);
        max_row_l1 = std::max(max_row_l1, row);
    }
    report.records.reserve(pairs.size());
    for (const auto& pair : pairs) {
        const auto full = attention_probabilities_row(inp, pair.query, causal);
        const auto restricted = masked_probabilities(inp, pair.kept, pair.query, causal);
        const auto approx = masked_attention(inp, pair.kept, pair.query, causal);
        const auto exact = mix_rows(full, inp.v);

        BoundRecord r;
        r.query = pair.query;
        r.gamma = gamma_mass(full, pair.kept);
        r.l1_error = l1_distance(exact, approx);
        r.tight_bound = r.gamma * (2.0 - r.gamma) * vinf;
        r.loose_bound = 2.0 * r.gamma * vinf;
        r.term2 = value_error_term(restricted, inp.v, pair.kept);
        r.prob_l1 = l1_distance(full, restricted);
        r.identity_residual = std::abs(r.prob_l1 - r.gamma * (2.0 - r.gamma));
        r.holds_tight = r.l1_error <= r.tight_bound + kBoundTolerance;
        r.holds_loose = r.l1_error <= r.loose_bound + kBoundTolerance;
        r.tv_residual = std::abs(r.prob_l1 - 2.0 * r.gamma);
        for (std::size_t c = 0; c < exact.size(); ++c) {
            r.linf_error = std::max(r.linf_error, std::abs(exact[c] - approx[c]));
        }
        r.row_l1_bound = 2.0 * r.gamma * max_row_l1;
        r.holds_sound = r.linf_error <= r.loose_bound + kBoundTolerance &&
                        r.l1_error <= r.row_l1_bound + kBoundTolerance;
        absorb(report.summary, r);
        report.records.push_back(r);
    }
    return report;
}

void merge_reports(BoundReport& into, const BoundReport& other) {
    into.summary.v_inf = std::max(into.summary.v_inf, other.summary.v_inf);
    for (const auto& r : other.records) {
        absorb(into.summary, r);
        into.records.push_back(r);
    }
}

std::string bound_report_json(const BoundReport& report) {
    const auto& s = report.summary;
    nlohmann::ordered_json root;
    root["summary"] = {
        {"checked", s.checked},
        {"tight_violations", s.tight_violations},
        {"loose_violations", s.loose_violations},
        {"identity_failures", s.identity_failures},
        {"max_gamma", s.max_gamma},
        {"max_violation", s.max_violation},
        {"max_identity_residual", s.max_identity_residual},
        {"max_term2", s.max_term2},
        {"v_inf", s.v_inf},
        {"sound_violations", s.sound_violations},
        {"tv_failures", s.tv_failures},
        {"max_tv_residual", s.max_tv_residual},
    };
    auto records = nlohmann::ordered_json::array();
    for (const auto& r : report.records) {
        records.push_back({{"query", r.query},
                           {"gamma", r.gamma},
                           {"l1_error", r.l1_error},
                           {"loose_bound", r.loose_bound},
                           {"tight_bound", r.tight_bound},
                           {"term2", r.term2},
                           {"prob_l1", r.prob_l1},
                           {"identity_residual", r.identity_residual},
                           {"holds_loose", r.holds_loose},
                           {"holds_tight", r.holds_tight},
                           {"tv_residual", r.tv_residual},
                           {"linf_error", r.linf_error},
                           {"row_l1_bound", r.row_l1_bound},
                           {"holds_sound", r.holds_sound}});
    }
    root["records"] = std::move(records);
    return root.dump(2) + "\n";
}

std::string bound_report_csv(const BoundReport& report) {
    std::string out =
        "query,gamma,l1_error,loose_bound,tight_bound,term2,prob_l1,identity_residual,holds_loose,"
        "holds_tight,tv_residual,linf_error,row_l1_bound,holds_sound\n";
    char line[768];
    for (const auto& r : report.records) {
        std::snprintf(line, sizeof line,
                      "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g,%.17g,%d\n",
                      r.query, r.gamma, r.l1_error, r.loose_bound, r.tight_bound, r.term2,
                      r.prob_l1, r.identity_residual, r.holds_loose ? 1 : 0,
                      r.holds_tight ? 1 : 0, r.tv_residual, r.linf_error, r.row_l1_bound,
                      r.holds_sound ? 1 : 0);
        out += line;
    }
    return out;
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::min(sorted.size() - 1, idx == 0 ? 0 : idx - 1)];
}

}  // namespace

std::vector<GammaAudit> gamma_vs_tau_audit(
    const HeadConfigTable& table, const std::map<HeadKey, std::vector<CalibrationSample>>& samples) {
    const auto params = table.selection_params();
    std::vector<GammaAudit> out;
    for (const auto& [key, list] : samples) {
        const auto& entry = table.at(key);
        GammaAudit audit;
        audit.key = key;
        audit.threshold = 1.0 - table.metadata.tau;
        std::vector<double> gammas;
        for (const auto& sample : list) {
            const auto selection = select_core_tokens(sample.inputs, entry.chosen, params);
            const auto scores = full_attention_scores(sample.inputs, Causal::on);
            for (std::size_t i = 0; i < sample.inputs.length(); ++i) {
                gammas.push_back(gamma_mass(scores, prefill_visible_set(selection, i), i));
            }
        }
        std::sort(gammas.begin(), gammas.end());
        audit.queries = gammas.size();
        if (!gammas.empty()) {
            double total = 0.0;
            std::size_t within = 0;
            for (double g : gammas) {
                total += g;
                if (g <= audit.threshold) ++within;
            }
            audit.fraction_within = static_cast<double>(within) / static_cast<double>(gammas.size());
            audit.min = gammas.front();
            audit.max = gammas.back();
            audit.mean = total / static_cast<double>(gammas.size());
            audit.median = quantile(gammas, 0.5);
            audit.p90 = quantile(gammas, 0.9);
        }
        out.push_back(audit);
    }
    return out;
}

}  // namespace tca
