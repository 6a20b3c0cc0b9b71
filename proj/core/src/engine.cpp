// SPDX-License-Identifier: Apache-2.0
#include "tca/engine.hpp"

#include <cmath>

#include "tca/error.hpp"

namespace tca {

HeadBufferLayout build_head_buffers(std::span<const SelectionResult> selections,
                                    std::span<const AttentionInputs> heads) {
    if (selections.size() != heads.size()) {
        throw ShapeError("build_head_buffers: " + std::to_string(selections.size()) +
                         " selections for " + std::to_string(heads.size()) + " heads");
    }
    HeadBufferLayout layout;
    std::vector<TokenIndexSet> kept;
    kept.reserve(heads.size());
    std::size_t total = 0;
    std::size_t dim = 0;
    for (std::size_t h = 0; h < heads.size(); ++h) {
        heads[h].validate();
        if (h == 0) dim = heads[h].head_dim();
        if (heads[h].head_dim() != dim) throw ShapeError("heads differ in head_dim");
        if (selections[h].partition.length() != heads[h].length()) {
            throw ShapeError("selection length differs from head length");
        }
        kept.push_back(selections[h].kept());
        layout.offsets.push_back(total);
        layout.counts.push_back(kept.back().size());
        total += kept.back().size();
    }
    layout.keys = Tensor2D(total, dim);
    layout.values = Tensor2D(total, dim);
    layout.positions.reserve(total);
    std::size_t row = 0;
    for (std::size_t h = 0; h < heads.size(); ++h) {
        for (std::size_t pos : kept[h]) {
            const auto k = heads[h].k.row(pos);
            const auto v = heads[h].v.row(pos);
            std::copy(k.begin(), k.end(), layout.keys.row(row).begin());
            std::copy(v.begin(), v.end(), layout.values.row(row).begin());
            layout.positions.push_back(pos);
            ++row;
        }
    }
    return layout;
}

TokenIndexSet prefill_visible_set(const SelectionResult& selection, std::size_t query) {
    return selection.kept().visible_with_self(query);
}

PrefillOutput prefill(const AttentionInputs& inp, const SparsityConfig& cfg,
                      const SelectionParams& params) {
    inp.validate();
    PrefillOutput out;
    out.selection = select_core_tokens(inp, cfg, params, &out.flops);

    const auto layout =
        build_head_buffers(std::span<const SelectionResult>(&out.selection, 1),
                           std::span<const AttentionInputs>(&inp, 1));
    const std::size_t length = inp.length();
    const std::size_t dim = inp.head_dim();
    const std::size_t fused = layout.counts[0];
    const double scale = inp.logit_scale();
    const std::span<const std::size_t> positions = layout.positions;

    out.flops.attention_flops += 4ULL * length * fused * dim;

    out.attention = Tensor2D(length, dim);
    std::vector<double> weights;
    weights.reserve(fused + 1);
    std::size_t visible = 0;  // fused rows with position <= query
    for (std::size_t i = 0; i < length; ++i) {
        while (visible < fused && positions[visible] <= i) ++visible;
        const bool self_kept = visible > 0 && positions[visible - 1] == i;
        const auto q = inp.q.row(i);

        weights.clear();
        for (std::size_t n = 0; n < visible; ++n) weights.push_back(dot(q, layout.keys.row(n)) * scale);
        if (!self_kept) {
            weights.push_back(dot(q, inp.k.row(i)) * scale);
            out.flops.self_token_flops += 4ULL * dim;
        }
        softmax_prefix(weights, weights.size());

        auto dst = out.attention.row(i);
        for (std::size_t n = 0; n < visible; ++n) {
            const auto v = layout.values.row(n);
            for (std::size_t c = 0; c < dim; ++c) dst[c] += weights[n] * v[c];
        }
        if (!self_kept) {
            const auto v = inp.v.row(i);
            for (std::size_t c = 0; c < dim; ++c) dst[c] += weights.back() * v[c];
        }
    }

    out.cache = KvCache(dim, params.block_size, decode_budget(cfg));
    for (std::size_t n = 0; n < fused; ++n) {
        out.cache.seed(positions[n], layout.keys.row(n), layout.values.row(n));
    }
    out.cache.set_next_position(length);
    return out;
}

}  // namespace tca
