// SPDX-License-Identifier: Apache-2.0
#include "tca/core_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tca/error.hpp"

namespace tca {

std::string_view to_string(RedundancyIndex index) noexcept {
    return index == RedundancyIndex::hhi ? "hhi" : "entropy";
}

RedundancyIndex parse_redundancy_index(std::string_view text) {
    if (text == "hhi") return RedundancyIndex::hhi;
    if (text == "entropy") return RedundancyIndex::entropy;
    throw ParameterError("unknown redundancy index '" + std::string(text) +
                         "' (expected hhi or entropy)");
}

void SelectionParams::validate() const {
    RetainCountSet check(block_size);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
}

BlockPartition BlockPartition::make(std::size_t length, std::size_t block_size,
                                    std::size_t window) {
    if (block_size < 2 || !is_power_of_two(block_size)) {
        throw ParameterError("block size must be a power of two >= 2, got " + std::to_string(block_size));
    }
    BlockPartition p;
    p.length_ = length;
    p.block_size_ = block_size;
    p.window_ = window;
    p.blocks_ = length > window ? (length - window) / block_size : 0;
    return p;
}

std::size_t BudgetAssignment::total() const noexcept {
    return std::accumulate(budgets.begin(), budgets.end(), std::size_t{0});
}

std::vector<double> token_importance(const AttentionInputs& inp, FlopCounter* flops) {
    inp.validate();
    const std::size_t last = inp.length() - 1;
    if (flops) {
        flops->overhead_flops += 2ULL * inp.length() * inp.head_dim();
    }
    return attention_probabilities_row(inp, last, Causal::on);
}

double concentration_term(std::span<const double> block, RedundancyIndex index) {
    double mass = 0.0;
    for (double x : block) mass += x;
    if (!(mass > 0.0)) return 0.0;

    if (index == RedundancyIndex::hhi) {
        double squares = 0.0;
        for (double x : block) squares += x * x;
        const double upper = 1.0 - 1.0 / static_cast<double>(block.size());
        return std::clamp(1.0 - squares / (mass * mass), 0.0, upper);
    }

    if (block.size() < 2) return 0.0;
    double entropy = 0.0;
    for (double x : block) {
        if (x > 0.0) {
            const double q = x / mass;
            entropy -= q * std::log(q);
        }
    }
    return std::clamp(entropy / std::log(static_cast<double>(block.size())), 0.0, 1.0);
}

std::vector<double> block_redundancy(std::span<const double> s, const BlockPartition& part,
                                     double alpha, RedundancyIndex index) {
    if (s.size() != part.length()) throw ShapeError("importance scores do not match partition");
    std::vector<double> h(part.block_count());
    for (std::size_t j = 0; j < h.size(); ++j) {
        const auto block = s.subspan(part.block_begin(j), part.block_size());
        double mass = 0.0;
        for (double x : block) mass += x;
        h[j] = (1.0 - alpha) * mass + alpha * concentration_term(block, index);
    }
    return h;
}

std::vector<std::size_t> rank_blocks(std::span<const double> h) {
    std::vector<std::size_t> order(h.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Ascending h; among ties the higher block index comes first so that the
    // lower index ends up with the higher rank.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (h[a] != h[b]) return h[a] < h[b];
        return a > b;
    });
    std::vector<std::size_t> rank(h.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos;
    return rank;
}

std::vector<std::size_t> budget_ladder(const SparsityConfig& cfg, std::size_t blocks) {
    cfg.validate();
    const auto counts = cfg.retain_counts();
    std::vector<std::size_t> ladder;
    ladder.reserve(blocks);
    for (std::size_t n = 0; n < counts.size(); ++n) {
        const double share = static_cast<double>(blocks) * cfg.probabilities[n];
        const auto copies = static_cast<std::size_t>(std::floor(share + 1e-9));
        ladder.insert(ladder.end(), copies, counts.counts()[n]);
    }
    // Floors can only undershoot m, except for a last-ulp overshoot when the
    // probabilities sum to slightly above 1; drop from the cheap end then.
    if (ladder.size() > blocks) {
        ladder.erase(ladder.begin(),
                     ladder.begin() + static_cast<std::ptrdiff_t>(ladder.size() - blocks));
    }
    ladder.resize(blocks, cfg.block_size);
    return ladder;
}

BudgetAssignment budget_assignment(std::span<const std::size_t> ranks, const SparsityConfig& cfg,
                                   std::size_t blocks) {
    if (ranks.size() != blocks) throw ShapeError("rank vector length differs from block count");
    BudgetAssignment out;
    out.ladder = budget_ladder(cfg, blocks);
    out.budgets.resize(blocks);
    std::vector<bool> seen(blocks, false);
    for (std::size_t j = 0; j < blocks; ++j) {
        if (ranks[j] >= blocks || seen[ranks[j]]) {
            throw ContractViolation("ranks are not a permutation of [0, m)");
        }
        seen[ranks[j]] = true;
        out.budgets[j] = out.ladder[ranks[j]];
    }
    return out;
}

SelectionResult select_tokens(std::span<const double> s, const BlockPartition& part,
                              const BudgetAssignment& budgets) {
    if (s.size() != part.length()) throw ShapeError("importance scores do not match partition");
    if (budgets.budgets.size() != part.block_count()) {
        throw ShapeError("budget count differs from block count");
    }
    std::vector<std::size_t> chosen;
    chosen.reserve(budgets.total());
    std::vector<std::size_t> candidates(part.block_size());
    for (std::size_t j = 0; j < part.block_count(); ++j) {
        const std::size_t take = std::min(budgets.budgets[j], part.block_size());
        std::iota(candidates.begin(), candidates.end(), part.block_begin(j));
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                          candidates.end(), [&](std::size_t a, std::size_t b) {
                              if (s[a] != s[b]) return s[a] > s[b];
                              return a < b;
                          });
        std::sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take));
        chosen.insert(chosen.end(), candidates.begin(),
                      candidates.begin() + static_cast<std::ptrdiff_t>(take));
    }
    SelectionResult out;
    out.partition = part;
    out.global = TokenIndexSet::from_sorted(std::move(chosen), part.length());
    out.local = part.local_subset();
    out.budgets = budgets;
    return out;
}

SelectionResult select_core_tokens(const AttentionInputs& inp, const SparsityConfig& cfg,
                                   const SelectionParams& params, FlopCounter* flops) {
    inp.validate();
    params.validate();
    if (cfg.block_size != params.block_size) {
        throw ParameterError("configuration block size " + std::to_string(cfg.block_size) +
                             " differs from selection block size " +
                             std::to_string(params.block_size));
    }
    const auto part = BlockPartition::make(inp.length(), params.block_size, params.window);
    if (!part.selection_active()) {
        SelectionResult out;
        out.partition = part;
        out.local = part.local_subset();
        return out;
    }

    const auto s = token_importance(inp, flops);
    if (flops) flops->overhead_flops += kSelectionFlopsPerToken * inp.length();

    auto h = block_redundancy(s, part, params.alpha, params.index);
    const auto ranks = rank_blocks(h);
    auto out = select_tokens(s, part, budget_assignment(ranks, cfg, part.block_count()));
    out.redundancy = std::move(h);
    return out;
}

}  // namespace tca
