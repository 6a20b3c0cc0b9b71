// SPDX-License-Identifier: Apache-2.0
#include "tca/attention_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "tca/error.hpp"

namespace tca {

double AttentionInputs::logit_scale() const {
    return 1.0 / std::sqrt(static_cast<double>(head_dim()));
}

void AttentionInputs::validate() const {
    if (q.rows() == 0 || q.cols() == 0) throw ShapeError("attention inputs: empty Q");
    if (k.rows() != q.rows() || v.rows() != q.rows() || k.cols() != q.cols() ||
        v.cols() != q.cols()) {
        throw ShapeError("attention inputs: Q " + std::to_string(q.rows()) + "x" +
                         std::to_string(q.cols()) + ", K " + std::to_string(k.rows()) + "x" +
                         std::to_string(k.cols()) + ", V " + std::to_string(v.rows()) + "x" +
                         std::to_string(v.cols()));
    }
}

TokenIndexSet TokenIndexSet::from_sorted(std::vector<std::size_t> indices, std::size_t length) {
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= length) {
            throw ContractViolation("token index " + std::to_string(indices[i]) +
                                    " out of range for length " + std::to_string(length));
        }
        if (i > 0 && indices[i] <= indices[i - 1]) {
            throw ContractViolation("token indices not strictly increasing");
        }
    }
    return TokenIndexSet(std::move(indices));
}

TokenIndexSet TokenIndexSet::from_unsorted(std::vector<std::size_t> indices, std::size_t length) {
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    return from_sorted(std::move(indices), length);
}

TokenIndexSet TokenIndexSet::range(std::size_t begin, std::size_t end) {
    std::vector<std::size_t> out;
    if (end > begin) {
        out.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) out.push_back(i);
    }
    return TokenIndexSet(std::move(out));
}

TokenIndexSet TokenIndexSet::united(const TokenIndexSet& other) const {
    std::vector<std::size_t> out;
    out.reserve(size() + other.size());
    std::set_union(begin(), end(), other.begin(), other.end(), std::back_inserter(out));
    return TokenIndexSet(std::move(out));
}

TokenIndexSet TokenIndexSet::intersected(const TokenIndexSet& other) const {
    std::vector<std::size_t> out;
    std::set_intersection(begin(), end(), other.begin(), other.end(), std::back_inserter(out));
    return TokenIndexSet(std::move(out));
}

TokenIndexSet TokenIndexSet::complement(std::size_t length) const {
    std::vector<std::size_t> out;
    auto it = begin();
    for (std::size_t i = 0; i < length; ++i) {
        if (it != end() && *it == i) {
            ++it;
        } else {
            out.push_back(i);
        }
    }
    return TokenIndexSet(std::move(out));
}

TokenIndexSet TokenIndexSet::causal_prefix(std::size_t position) const {
    return TokenIndexSet(std::vector<std::size_t>(begin(), begin() + static_cast<std::ptrdiff_t>(
                                                                          count_through(position))));
}

TokenIndexSet TokenIndexSet::visible_with_self(std::size_t position) const {
    auto out = causal_prefix(position);
    if (out.empty() || out.indices_.back() != position) out.indices_.push_back(position);
    return out;
}

bool TokenIndexSet::contains(std::size_t index) const noexcept {
    return std::binary_search(begin(), end(), index);
}

std::size_t TokenIndexSet::count_through(std::size_t position) const noexcept {
    return static_cast<std::size_t>(std::upper_bound(begin(), end(), position) - begin());
}

Tensor2D full_attention_scores(const AttentionInputs& inp, Causal causal) {
    inp.validate();
    return softmax_rows(scale(matmul_transposed(inp.q, inp.k), inp.logit_scale()), causal);
}

Tensor2D full_attention(const AttentionInputs& inp, Causal causal) {
    return matmul(full_attention_scores(inp, causal), inp.v);
}

std::vector<double> attention_probabilities_row(const AttentionInputs& inp, std::size_t query,
                                                Causal causal) {
    inp.validate();
    const std::size_t length = inp.length();
    if (query >= length) throw ShapeError("query row out of range");
    const double s = inp.logit_scale();
    std::vector<double> row(length, 0.0);
    const std::size_t visible = causal == Causal::on ? query + 1 : length;
    for (std::size_t j = 0; j < visible; ++j) row[j] = dot(inp.q.row(query), inp.k.row(j)) * s;
    softmax_prefix(row, visible);
    return row;
}

namespace {

// Kept indices the query may attend to, in ascending order.
std::span<const std::size_t> visible_kept(const TokenIndexSet& kept, std::size_t query,
                                          Causal causal) {
    const auto all = kept.indices();
    if (causal == Causal::off) return all;
    return all.first(kept.count_through(query));
}

// Renormalized softmax weights over `positions`.
std::vector<double> restricted_weights(const AttentionInputs& inp,
                                       std::span<const std::size_t> positions, std::size_t query) {
    if (positions.empty()) {
        throw ContractViolation("no kept token visible to query " + std::to_string(query));
    }
    const double s = inp.logit_scale();
    std::vector<double> w(positions.size());
    for (std::size_t n = 0; n < positions.size(); ++n) {
        if (positions[n] >= inp.length()) throw ContractViolation("kept index out of range");
        w[n] = dot(inp.q.row(query), inp.k.row(positions[n])) * s;
    }
    softmax_prefix(w, w.size());
    return w;
}

}  // namespace

std::vector<double> masked_probabilities(const AttentionInputs& inp, const TokenIndexSet& kept,
                                         std::size_t query, Causal causal) {
    inp.validate();
    if (query >= inp.length()) throw ShapeError("query row out of range");
    const auto positions = visible_kept(kept, query, causal);
    const auto w = restricted_weights(inp, positions, query);
    std::vector<double> out(inp.length(), 0.0);
    for (std::size_t n = 0; n < positions.size(); ++n) out[positions[n]] = w[n];
    return out;
}

std::vector<double> masked_attention(const AttentionInputs& inp, const TokenIndexSet& kept,
                                     std::size_t query, Causal causal) {
    inp.validate();
    if (query >= inp.length()) throw ShapeError("query row out of range");
    const auto positions = visible_kept(kept, query, causal);
    const auto w = restricted_weights(inp, positions, query);
    std::vector<double> out(inp.head_dim(), 0.0);
    for (std::size_t n = 0; n < positions.size(); ++n) {
        const auto v = inp.v.row(positions[n]);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[n] * v[c];
    }
    return out;
}

double gamma_mass(std::span<const double> row, const TokenIndexSet& kept) {
    double dropped = 0.0;
    auto it = kept.begin();
    for (std::size_t j = 0; j < row.size(); ++j) {
        while (it != kept.end() && *it < j) ++it;
        if (it != kept.end() && *it == j) continue;
        dropped += row[j];
    }
    return dropped;
}

double gamma_mass(const Tensor2D& scores, const TokenIndexSet& kept, std::size_t query) {
    if (query >= scores.rows()) throw ShapeError("gamma_mass: query row out of range");
    return gamma_mass(scores.row(query), kept);
}

}  // namespace tca
