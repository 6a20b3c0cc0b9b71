// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace tca {

/// Work tally filled in by the engine as it runs. Attention work is counted
/// the way a fused kernel executes it: every query against every key of the
/// fused (global + local) set, 2 FLOPs per multiply-accumulate for QK^T and
/// again for AV. Keys a query may not see causally are still counted, matching
/// the dense L x L convention of the full-attention figure.
struct FlopCounter {
    std::uint64_t attention_flops = 0;
    /// Diagonal entries added so every query sees itself; reported, not part of attention_flops.
    std::uint64_t self_token_flops = 0;
    /// Last-query scoring (2 L d_h) plus 8 per token for normalization,
    /// redundancy sums, mixing and ranking.
    std::uint64_t overhead_flops = 0;

    FlopCounter& operator+=(const FlopCounter& o) noexcept {
        attention_flops += o.attention_flops;
        self_token_flops += o.self_token_flops;
        overhead_flops += o.overhead_flops;
        return *this;
    }
};

/// Per-token constant of the selection overhead term.
inline constexpr std::uint64_t kSelectionFlopsPerToken = 8;

}  // namespace tca
