// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tca/attention_oracle.hpp"
#include "tca/core_selection.hpp"
#include "tca/flop_counter.hpp"
#include "tca/kv_cache.hpp"
#include "tca/sparsity_config.hpp"

namespace tca {

/// Retained tokens of several heads packed into one contiguous key buffer and
/// one value buffer. Head h owns rows [offsets[h], offsets[h] + counts[h]),
/// stored in ascending original position.
struct HeadBufferLayout {
    Tensor2D keys;
    Tensor2D values;
    std::vector<std::size_t> positions;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> counts;

    std::size_t head_count() const noexcept { return counts.size(); }
    std::span<const std::size_t> head_positions(std::size_t h) const {
        return std::span<const std::size_t>(positions).subspan(offsets[h], counts[h]);
    }
};

/// Gathers each head's kept() set from its own K and V.
HeadBufferLayout build_head_buffers(std::span<const SelectionResult> selections,
                                    std::span<const AttentionInputs> heads);

struct PrefillOutput {
    Tensor2D attention;
    SelectionResult selection;
    KvCache cache;
    FlopCounter flops;
};

/// Key positions query `query` attends to during prefill: the kept set up to
/// and including `query`, plus `query` itself.
TokenIndexSet prefill_visible_set(const SelectionResult& selection, std::size_t query);

/// Sparse prefill for one head. Runs online selection with `cfg`, then every
/// query attends causally over the fused global + local set (plus itself).
/// With L <= w this is exactly full causal attention. The returned cache is
/// seeded with the retained set and decodes with budget decode_budget(cfg).
PrefillOutput prefill(const AttentionInputs& inp, const SparsityConfig& cfg,
                      const SelectionParams& params);

}  // namespace tca
