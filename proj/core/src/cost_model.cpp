// SPDX-License-Identifier: Apache-2.0
#include "tca/cost_model.hpp"

#include <algorithm>
#include <string>

#include "tca/error.hpp"
#include "tca/flop_counter.hpp"
#include "tca/sparsity_config.hpp"

namespace tca {

double CostModel::flop_ratio() const noexcept {
    return static_cast<double>(sparse_flops + overhead_flops) / static_cast<double>(full_flops);
}

double CostModel::flop_ratio_before_overhead() const noexcept {
    return static_cast<double>(sparse_flops) / static_cast<double>(full_flops);
}

double CostModel::kv_ratio() const noexcept {
    return static_cast<double>(kv_bytes_sparse) / static_cast<double>(kv_bytes_full);
}

CostModel cost_model(std::size_t length, std::size_t head_dim, std::size_t heads,
                     std::span<const std::size_t> retained_per_head, std::size_t window,
                     std::size_t block_size) {
    if (length == 0 || head_dim == 0 || heads == 0) {
        throw ParameterError("cost model needs positive length, head_dim and heads");
    }
    if (!is_power_of_two(block_size) || block_size < 2) {
        throw ParameterError("block size must be a power of two >= 2");
    }
    if (retained_per_head.size() != heads) {
        throw ParameterError("expected " + std::to_string(heads) + " retained counts, got " +
                             std::to_string(retained_per_head.size()));
    }
    const std::uint64_t L = length;
    const std::uint64_t d = head_dim;
    const std::uint64_t w = std::min(window, length);

    CostModel c;
    c.full_flops = heads * 4 * L * L * d;
    std::uint64_t kept = 0;
    for (std::size_t r : retained_per_head) {
        if (r + w > L) {
            throw ParameterError("retained " + std::to_string(r) + " plus window " +
                                 std::to_string(w) + " exceeds length " + std::to_string(L));
        }
        kept += r + w;
    }
    c.sparse_flops = 4 * L * kept * d;
    if (length > window) c.overhead_flops = heads * (2 * L * d + kSelectionFlopsPerToken * L);
    c.kv_bytes_full = kBytesPerScalar * 2 * heads * L * d;
    c.kv_bytes_sparse = kBytesPerScalar * 2 * kept * d;
    c.retained_fraction = static_cast<double>(kept) / static_cast<double>(heads * L);
    return c;
}

}  // namespace tca
