// SPDX-License-Identifier: Apache-2.0
#include "tca/session.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <json.hpp>

#include "tca/engine.hpp"
#include "tca/error.hpp"
#include "tca/parallel.hpp"

namespace tca {

SyntheticQkvSource::SyntheticQkvSource(Seed seed, std::size_t head_index, std::size_t head_dim)
    : rng_(Seed{mix_seed(seed.value, head_index)}), head_dim_(head_dim) {}

SyntheticQkvSource::Token SyntheticQkvSource::next() {
    Token t;
    for (auto* vec : {&t.q, &t.k, &t.v}) {
        vec->resize(head_dim_);
        for (double& x : *vec) x = rng_.gaussian();
    }
    return t;
}

namespace {

struct HeadRun {
    HeadSummary summary;
    FlopCounter flops;
    std::vector<std::size_t> cache_sizes;
    std::vector<double> gammas;
    std::vector<double> errors;
};

// Exact reference state for one head: the whole token history.
class ExactHistory {
public:
    explicit ExactHistory(const AttentionInputs& inp) : keys_(inp.k), values_(inp.v) {}

    void append(const std::vector<double>& k, const std::vector<double>& v) {
        keys_rows_.push_back(k);
        values_rows_.push_back(v);
    }

    // Full-attention output and the mass outside `kept` for a query at the newest position.
    std::pair<std::vector<double>, double> attend(const std::vector<double>& q,
                                                  const std::vector<std::size_t>& kept) const {
        const std::size_t total = keys_.rows() + keys_rows_.size();
        const double scale = 1.0 / std::sqrt(static_cast<double>(q.size()));
        std::vector<double> w(total);
        for (std::size_t j = 0; j < total; ++j) w[j] = dot(q, key(j)) * scale;
        softmax_prefix(w, total);
        std::vector<double> out(q.size(), 0.0);
        for (std::size_t j = 0; j < total; ++j) {
            const auto v = value(j);
            for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[j] * v[c];
        }
        const auto set = TokenIndexSet::from_sorted(kept, total);
        return {std::move(out), gamma_mass(w, set)};
    }

private:
    std::span<const double> key(std::size_t j) const {
        return j < keys_.rows() ? keys_.row(j) : std::span<const double>(keys_rows_[j - keys_.rows()]);
    }
    std::span<const double> value(std::size_t j) const {
        return j < values_.rows() ? values_.row(j)
                                  : std::span<const double>(values_rows_[j - values_.rows()]);
    }

    const Tensor2D& keys_;
    const Tensor2D& values_;
    std::vector<std::vector<double>> keys_rows_;
    std::vector<std::vector<double>> values_rows_;
};

HeadRun run_head(const HeadInput& head, std::size_t head_index, const HeadConfigTable& table,
                 const SessionOptions& options) {
    const auto& entry = table.at(head.key);
    const auto& inp = head.inputs;
    auto pre = prefill(inp, entry.chosen, table.selection_params());

    HeadRun run;
    run.flops = pre.flops;
    const std::size_t length = inp.length();
    run.summary = {head.key,
                   length,
                   pre.selection.global.size(),
                   pre.selection.local.size(),
                   pre.cache.decode_budget(),
                   static_cast<double>(pre.cache.size()) / static_cast<double>(length)};
    run.cache_sizes.push_back(pre.cache.size());

    if (options.oracle) {
        const auto full = full_attention_scores(inp, Causal::on);
        const auto values = matmul(full, inp.v);
        const auto kept = pre.selection.kept();
        double worst_gamma = 0.0;
        double worst_error = 0.0;
        for (std::size_t i = 0; i < length; ++i) {
            const auto visible = kept.visible_with_self(i);
            worst_gamma = std::max(worst_gamma, gamma_mass(full, visible, i));
            worst_error =
                std::max(worst_error, l1_distance(values.row(i), pre.attention.row(i)));
        }
        run.gammas.push_back(worst_gamma);
        run.errors.push_back(worst_error);
    }

    SyntheticQkvSource source(options.seed, head_index, inp.head_dim());
    std::optional<ExactHistory> history;
    if (options.oracle) history.emplace(inp);
    for (std::size_t s = 1; s <= options.decode_steps; ++s) {
        const std::size_t position = length + s - 1;
        auto token = source.next();
        // The attended set is everything cached before the step plus the new token.
        std::vector<std::size_t> attended;
        if (history) {
            attended = pre.cache.positions();
            attended.push_back(position);
            history->append(token.k, token.v);
        }
        const auto out = pre.cache.step(token.q, token.k, token.v, position);
        run.cache_sizes.push_back(pre.cache.size());
        if (history) {
            auto [exact, gamma] = history->attend(token.q, attended);
            run.gammas.push_back(gamma);
            run.errors.push_back(l1_distance(exact, out));
        }
    }
    return run;
}

}  // namespace

SessionTrace run_session(const std::vector<HeadInput>& heads, const HeadConfigTable& table,
                         const SessionOptions& options) {
    if (heads.empty()) throw ParameterError("session needs at least one head");
    for (const auto& h : heads) {
        table.at(h.key);
        if (h.inputs.length() != heads.front().inputs.length()) {
            throw ShapeError("all heads of a session must share one sequence length");
        }
    }

    std::vector<HeadRun> runs(heads.size());
    parallel_for(heads.size(), options.jobs,
                 [&](std::size_t h) { runs[h] = run_head(heads[h], h, table, options); });

    SessionTrace trace;
    const std::size_t length = heads.front().inputs.length();
    for (auto& run : runs) {
        trace.heads.push_back(run.summary);
        trace.prefill_flops += run.flops;
        trace.head_cache_sizes.push_back(run.cache_sizes);
    }
    for (std::size_t s = 0; s <= options.decode_steps; ++s) {
        StepRecord rec;
        rec.step = s;
        rec.phase = s == 0 ? "prefill" : "decode";
        rec.position = length + s - 1;
        for (const auto& run : runs) rec.cache_size += run.cache_sizes[s];
        rec.retained_fraction = static_cast<double>(rec.cache_size) /
                                static_cast<double>(runs.size() * (rec.position + 1));
        if (options.oracle) {
            double g = 0.0;
            double e = 0.0;
            for (const auto& run : runs) {
                g = std::max(g, run.gammas[s]);
                e = std::max(e, run.errors[s]);
            }
            rec.gamma = g;
            rec.l1_error = e;
        }
        trace.records.push_back(std::move(rec));
    }
    return trace;
}

std::string serialize_trace(const SessionTrace& trace) {
    std::string out;
    for (const auto& r : trace.records) {
        nlohmann::ordered_json j;
        j["step"] = r.step;
        j["phase"] = r.phase;
        j["position"] = r.position;
        j["cache_size"] = r.cache_size;
        j["retained_fraction"] = r.retained_fraction;
        if (r.gamma) j["gamma"] = *r.gamma;
        if (r.l1_error) j["l1_error"] = *r.l1_error;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace tca
