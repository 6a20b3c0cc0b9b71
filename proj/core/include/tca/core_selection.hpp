// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tca/attention_oracle.hpp"
#include "tca/flop_counter.hpp"
#include "tca/sparsity_config.hpp"

namespace tca {

/// Concentration index mixed into the block redundancy score.
enum class RedundancyIndex { hhi, entropy };

std::string_view to_string(RedundancyIndex index) noexcept;
/// Accepts "hhi" or "entropy"; throws ParameterError otherwise.
RedundancyIndex parse_redundancy_index(std::string_view text);

/// Online selection knobs. Defaults are the large-model regime (b = 128,
/// w = 4096, alpha = 0.5, HHI).
struct SelectionParams {
    std::size_t block_size = 128;
    std::size_t window = 4096;
    double alpha = 0.5;
    RedundancyIndex index = RedundancyIndex::hhi;

    void validate() const;
};

/// Splits [0, L) into full blocks, an undivided tail and the local window:
///
///   [0, m*b)            m full blocks of b tokens, m = floor((L - w) / b)
///   [m*b, L - w)        tail, shorter than one block
///   [L - w, L)          most recent w tokens
///
/// The blocks never reach into the window, so global and local subsets are
/// disjoint by construction. When L <= w everything is local.
class BlockPartition {
public:
    BlockPartition() = default;
    static BlockPartition make(std::size_t length, std::size_t block_size, std::size_t window);

    std::size_t length() const noexcept { return length_; }
    std::size_t block_size() const noexcept { return block_size_; }
    std::size_t window() const noexcept { return window_; }
    std::size_t block_count() const noexcept { return blocks_; }

    std::size_t block_begin(std::size_t j) const noexcept { return j * block_size_; }
    std::size_t block_end(std::size_t j) const noexcept { return (j + 1) * block_size_; }
    std::size_t tail_begin() const noexcept { return blocks_ * block_size_; }
    std::size_t window_begin() const noexcept { return length_ - std::min(window_, length_); }
    std::size_t tail_size() const noexcept { return window_begin() - tail_begin(); }
    std::size_t window_size() const noexcept { return length_ - window_begin(); }

    /// Tail plus window: [m*b, L).
    TokenIndexSet local_subset() const { return TokenIndexSet::range(tail_begin(), length_); }
    /// True when L > w, i.e. scoring and block selection actually run.
    bool selection_active() const noexcept { return length_ > window_; }

private:
    std::size_t length_ = 0;
    std::size_t block_size_ = 0;
    std::size_t window_ = 0;
    std::size_t blocks_ = 0;
};

/// Per-block retain counts t and the sorted ladder Psi they were drawn from.
struct BudgetAssignment {
    std::vector<std::size_t> budgets;
    std::vector<std::size_t> ladder;

    std::size_t total() const noexcept;
};

struct SelectionResult {
    BlockPartition partition;
    TokenIndexSet global;
    TokenIndexSet local;
    BudgetAssignment budgets;
    std::vector<double> redundancy;

    /// global U local, the full retained set.
    TokenIndexSet kept() const { return global.united(local); }
};

/// softmax(q_last K^T / sqrt(d_h)) over all L tokens.
std::vector<double> token_importance(const AttentionInputs& inp, FlopCounter* flops = nullptr);

/// Second term of the redundancy score for one block. HHI: 1 - sum s^2 / (sum s)^2.
/// Entropy: entropy of s / sum s in log base |block|. Zero-mass blocks give 0.
double concentration_term(std::span<const double> block, RedundancyIndex index);

/// h_j = (1 - alpha) * sum_{i in B_j} s_i + alpha * concentration_term(B_j).
std::vector<double> block_redundancy(std::span<const double> s, const BlockPartition& part,
                                     double alpha, RedundancyIndex index);

/// Ranks in [0, m): larger h gets a larger rank; among equal h the lower
/// block index gets the higher rank.
std::vector<std::size_t> rank_blocks(std::span<const double> h);

/// Psi: floor(m * p_k) copies of each k, ascending, padded with b up to m entries.
std::vector<std::size_t> budget_ladder(const SparsityConfig& cfg, std::size_t blocks);

/// t_j = Psi[r_j].
BudgetAssignment budget_assignment(std::span<const std::size_t> ranks, const SparsityConfig& cfg,
                                   std::size_t blocks);

/// Top-t_j tokens of every full block by importance (ties to the lower index).
SelectionResult select_tokens(std::span<const double> s, const BlockPartition& part,
                              const BudgetAssignment& budgets);

/// Scoring, redundancy, ranking, budgeting and top-k selection for one head.
/// With L <= w nothing is scored and the whole sequence is local.
SelectionResult select_core_tokens(const AttentionInputs& inp, const SparsityConfig& cfg,
                                   const SelectionParams& params, FlopCounter* flops = nullptr);

}  // namespace tca
