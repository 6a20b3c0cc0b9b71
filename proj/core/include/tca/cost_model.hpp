// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace tca {

inline constexpr std::uint64_t kBytesPerScalar = 4;

/// Analytic work and memory of one attention layer at sequence length L.
///
///   full_flops     = heads * 4 L^2 d_h
///   sparse_flops   = sum_h 4 L (retained_h + w) d_h
///   overhead_flops = heads * (2 L d_h + 8 L), zero when L <= w
///   kv_bytes_*     = 4 bytes * 2 matrices * tokens * d_h
///
/// `w` is clamped to L. `retained_h` counts the tokens a head keeps outside
/// its last w positions.
struct CostModel {
    std::uint64_t full_flops = 0;
    std::uint64_t sparse_flops = 0;
    std::uint64_t overhead_flops = 0;
    std::uint64_t kv_bytes_full = 0;
    std::uint64_t kv_bytes_sparse = 0;
    /// sum_h (retained_h + w) / (heads L)
    double retained_fraction = 0.0;

    /// (sparse + overhead) / full
    double flop_ratio() const noexcept;
    /// sparse / full
    double flop_ratio_before_overhead() const noexcept;
    double kv_ratio() const noexcept;
};

/// Throws ParameterError on a zero dimension, a block size that is not a
/// power of two >= 2, a head count that disagrees with retained_per_head, or
/// retained_h + min(w, L) > L.
CostModel cost_model(std::size_t length, std::size_t head_dim, std::size_t heads,
                     std::span<const std::size_t> retained_per_head, std::size_t window,
                     std::size_t block_size);

}  // namespace tca
