// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tca {

struct CachedToken {
    std::size_t position = 0;
    std::vector<double> key;
    std::vector<double> value;
};

/// Single-head decoding cache.
///
/// Holds the prefill retained set (global, tail and window) plus survivors of
/// earlier flushes in `retained`, and up to b - 1 not yet compressed tokens in
/// `staging`. Each decode step appends the new token to staging and attends
/// over retained + staging. When staging reaches b tokens it is scored against
/// the current query, the top-t survive into `retained` (ties to the lower
/// position) and the rest are dropped for good.
///
/// Single owner; not safe for concurrent mutation.
class KvCache {
public:
    KvCache() = default;
    KvCache(std::size_t head_dim, std::size_t block_size, std::size_t decode_budget);

    /// Adds a prefill token. Positions must arrive in strictly increasing order.
    void seed(std::size_t position, std::span<const double> key, std::span<const double> value);
    /// Next accepted decode position; set when prefill seeding is done.
    void set_next_position(std::size_t position) noexcept { next_position_ = position; }

    /// One decode step. Returns the attention output for `query`. Throws
    /// ContractViolation unless position == previous position + 1.
    std::vector<double> step(std::span<const double> query, std::span<const double> key,
                             std::span<const double> value, std::size_t position);

    std::size_t size() const noexcept { return retained_.size() + staging_.size(); }
    std::size_t retained_size() const noexcept { return retained_.size(); }
    std::size_t staging_size() const noexcept { return staging_.size(); }
    std::size_t head_dim() const noexcept { return head_dim_; }
    std::size_t block_size() const noexcept { return block_size_; }
    std::size_t decode_budget() const noexcept { return decode_budget_; }
    std::size_t next_position() const noexcept { return next_position_; }
    std::size_t flush_count() const noexcept { return flushes_; }

    const std::vector<CachedToken>& retained() const noexcept { return retained_; }
    const std::vector<CachedToken>& staging() const noexcept { return staging_; }
    /// All attendable positions in ascending order.
    std::vector<std::size_t> positions() const;

private:
    void flush(std::span<const double> query);

    std::size_t head_dim_ = 0;
    std::size_t block_size_ = 0;
    std::size_t decode_budget_ = 0;
    std::size_t next_position_ = 0;
    std::size_t flushes_ = 0;
    std::vector<CachedToken> retained_;
    std::vector<CachedToken> staging_;
};

}  // namespace tca
