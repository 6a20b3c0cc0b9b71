// SPDX-License-Identifier: Apache-2.0
#include "tca/kv_cache.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tca/error.hpp"
#include "tca/sparsity_config.hpp"
#include "tca/tensor.hpp"

namespace tca {

KvCache::KvCache(std::size_t head_dim, std::size_t block_size, std::size_t decode_budget)
    : head_dim_(head_dim), block_size_(block_size), decode_budget_(decode_budget) {
    if (head_dim == 0) throw ParameterError("head_dim must be positive");
    RetainCountSet check(block_size);
    if (decode_budget < 1 || decode_budget > block_size) {
        throw ParameterError("decode budget must lie in [1, b]");
    }
}

void KvCache::seed(std::size_t position, std::span<const double> key,
                   std::span<const double> value) {
    if (key.size() != head_dim_ || value.size() != head_dim_) {
        throw ShapeError("cached key/value width differs from head_dim");
    }
    if (!retained_.empty() && position <= retained_.back().position) {
        throw ContractViolation("prefill positions must be strictly increasing");
    }
    retained_.push_back({position, {key.begin(), key.end()}, {value.begin(), value.end()}});
    next_position_ = std::max(next_position_, position + 1);
}

std::vector<double> KvCache::step(std::span<const double> query, std::span<const double> key,
                                  std::span<const double> value, std::size_t position) {
    if (query.size() != head_dim_ || key.size() != head_dim_ || value.size() != head_dim_) {
        throw ShapeError("decode vectors must have head_dim entries");
    }
    if (position != next_position_) {
        throw ContractViolation("decode position " + std::to_string(position) +
                                " out of order; expected " + std::to_string(next_position_));
    }
    staging_.push_back({position, {key.begin(), key.end()}, {value.begin(), value.end()}});
    next_position_ = position + 1;

    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
    std::vector<double> weights;
    weights.reserve(size());
    for (const auto& t : retained_) weights.push_back(dot(query, t.key) * scale);
    for (const auto& t : staging_) weights.push_back(dot(query, t.key) * scale);
    softmax_prefix(weights, weights.size());

    std::vector<double> out(head_dim_, 0.0);
    std::size_t n = 0;
    for (const auto* region : {&retained_, &staging_}) {
        for (const auto& t : *region) {
            for (std::size_t c = 0; c < head_dim_; ++c) out[c] += weights[n] * t.value[c];
            ++n;
        }
    }

    if (staging_.size() == block_size_) flush(query);
    return out;
}

void KvCache::flush(std::span<const double> query) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
    std::vector<double> scores;
    scores.reserve(staging_.size());
    for (const auto& t : staging_) scores.push_back(dot(query, t.key) * scale);
    softmax_prefix(scores, scores.size());

    std::vector<std::size_t> order(staging_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto keep = static_cast<std::ptrdiff_t>(std::min(decode_budget_, staging_.size()));
    // Staging is in position order, so the lower slot is the lower position.
    std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    std::sort(order.begin(), order.begin() + keep);
    for (auto it = order.begin(); it != order.begin() + keep; ++it) {
        retained_.push_back(std::move(staging_[*it]));
    }
    staging_.clear();
    ++flushes_;
}

std::vector<std::size_t> KvCache::positions() const {
    std::vector<std::size_t> out;
    out.reserve(size());
    for (const auto& t : retained_) out.push_back(t.position);
    for (const auto& t : staging_) out.push_back(t.position);
    return out;
}

}  // namespace tca
