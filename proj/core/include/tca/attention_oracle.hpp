// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tca/tensor.hpp"

namespace tca {

/// Single-head attention operands: Q, K, V are all L x d_h.
struct AttentionInputs {
    Tensor2D q;
    Tensor2D k;
    Tensor2D v;

    std::size_t length() const noexcept { return q.rows(); }
    std::size_t head_dim() const noexcept { return q.cols(); }
    /// 1 / sqrt(d_h)
    double logit_scale() const;
    /// Throws ShapeError unless the three matrices share one nonempty L x d_h shape.
    void validate() const;
};

/// Strictly increasing token positions, each in [0, L).
class TokenIndexSet {
public:
    TokenIndexSet() = default;

    /// Validates order and bounds; throws ContractViolation otherwise.
    static TokenIndexSet from_sorted(std::vector<std::size_t> indices, std::size_t length);
    /// Sorts and removes duplicates first.
    static TokenIndexSet from_unsorted(std::vector<std::size_t> indices, std::size_t length);
    /// [begin, end)
    static TokenIndexSet range(std::size_t begin, std::size_t end);
    static TokenIndexSet all(std::size_t length) { return range(0, length); }

    TokenIndexSet united(const TokenIndexSet& other) const;
    TokenIndexSet intersected(const TokenIndexSet& other) const;
    TokenIndexSet complement(std::size_t length) const;
    /// Members <= position, i.e. what a causal query at `position` can see.
    TokenIndexSet causal_prefix(std::size_t position) const;
    /// Causal prefix plus `position` itself.
    TokenIndexSet visible_with_self(std::size_t position) const;

    bool contains(std::size_t index) const noexcept;
    /// Number of members <= position.
    std::size_t count_through(std::size_t position) const noexcept;

    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    std::span<const std::size_t> indices() const noexcept { return indices_; }
    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }

    friend bool operator==(const TokenIndexSet&, const TokenIndexSet&) = default;

private:
    explicit TokenIndexSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {}
    std::vector<std::size_t> indices_;
};

/// softmax(Q K^T / sqrt(d_h)), L x L.
Tensor2D full_attention_scores(const AttentionInputs& inp, Causal causal);

/// softmax(Q K^T / sqrt(d_h)) V, L x d_h.
Tensor2D full_attention(const AttentionInputs& inp, Causal causal);

/// One row of full_attention_scores computed without the L x L matrix.
std::vector<double> attention_probabilities_row(const AttentionInputs& inp, std::size_t query,
                                                Causal causal);

/// Full-length restricted distribution: softmax renormalized over the kept
/// indices that `query` can see, 0 elsewhere.
std::vector<double> masked_probabilities(const AttentionInputs& inp, const TokenIndexSet& kept,
                                         std::size_t query, Causal causal);

/// Attention output for `query` using only the kept keys/values. With
/// Causal::on, kept indices > query are ignored before renormalization.
/// Throws ContractViolation when nothing visible remains.
std::vector<double> masked_attention(const AttentionInputs& inp, const TokenIndexSet& kept,
                                     std::size_t query, Causal causal);

/// Probability mass of `row` that falls outside `kept`.
double gamma_mass(std::span<const double> row, const TokenIndexSet& kept);
double gamma_mass(const Tensor2D& scores, const TokenIndexSet& kept, std::size_t query);

}  // namespace tca
