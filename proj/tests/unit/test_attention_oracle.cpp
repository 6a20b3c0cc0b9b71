// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tca/attention_oracle.hpp"
#include "tca/error.hpp"

namespace tca {
namespace {

AttentionInputs seeded(std::size_t L, std::size_t d, std::uint64_t seed) {
    return {random_tensor(L, d, Seed{seed}, Distribution::gaussian),
            random_tensor(L, d, Seed{seed + 1}, Distribution::gaussian),
            random_tensor(L, d, Seed{seed + 2}, Distribution::gaussian)};
}

TEST(FullAttention, SingleTokenReturnsItsValue) {
    const auto inp = seeded(1, 4, 1);
    const auto out = full_attention(inp, Causal::on);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out(0, c), inp.v(0, c));
}

TEST(FullAttention, IdenticalKeysGiveColumnMeanOfV) {
    auto inp = seeded(6, 3, 2);
    for (std::size_t j = 0; j < 6; ++j)
        for (std::size_t c = 0; c < 3; ++c) inp.k(j, c) = 0.7;
    const auto out = full_attention(inp, Causal::off);
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t j = 0; j < 6; ++j) mean += inp.v(j, c);
        mean /= 6.0;
        for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(out(i, c), mean, 1e-12);
    }
}

TEST(FullAttention, SeededMatchesLoopOracle) {
    const auto inp = seeded(16, 8, 3);
    for (bool causal : {false, true}) {
        const auto out = full_attention(inp, causal ? Causal::on : Causal::off);
        EXPECT_LE(max_abs_diff(out, oracle::attention(inp, causal)), 1e-9);
    }
}

TEST(FullAttention, RowsInsideConvexHullOfVisibleValues) {
    const auto inp = seeded(20, 5, 4);
    const auto out = full_attention(inp, Causal::on);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t c = 0; c < 5; ++c) {
            double lo = inp.v(0, c), hi = inp.v(0, c);
            for (std::size_t j = 0; j <= i; ++j) {
                lo = std::min(lo, inp.v(j, c));
                hi = std::max(hi, inp.v(j, c));
            }
            EXPECT_GE(out(i, c), lo - 1e-12);
            EXPECT_LE(out(i, c), hi + 1e-12);
        }
}

TEST(FullAttention, ShapeMismatchThrows) {
    auto inp = seeded(4, 3, 5);
    inp.v = Tensor2D(4, 2);
    EXPECT_THROW(full_attention(inp, Causal::on), ShapeError);
}

TEST(FullAttentionScores, SingleToken) {
    EXPECT_EQ(full_attention_scores(seeded(1, 2, 6), Causal::on), Tensor2D(1, 1, 1.0));
}

TEST(FullAttentionScores, ZeroQueryIsCausalUniform) {
    auto inp = seeded(7, 3, 7);
    inp.q = Tensor2D(7, 3, 0.0);
    const auto a = full_attention_scores(inp, Causal::on);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j)
            EXPECT_NEAR(a(i, j), j <= i ? 1.0 / static_cast<double>(i + 1) : 0.0, 1e-15);
}

TEST(FullAttentionScores, MatchesComposedSoftmax) {
    const auto inp = seeded(8, 4, 8);
    const auto composed =
        softmax_rows(scale(matmul(inp.q, transpose(inp.k)), 1.0 / std::sqrt(4.0)), Causal::on);
    EXPECT_LE(max_abs_diff(full_attention_scores(inp, Causal::on), composed), 1e-15);
}

TEST(MaskedAttention, KeepAllEqualsFull) {
    const auto inp = seeded(12, 4, 9);
    const auto full = full_attention(inp, Causal::on);
    const auto all = TokenIndexSet::all(12);
    for (std::size_t i = 0; i < 12; ++i) {
        const auto row = masked_attention(inp, all, i, Causal::on);
        EXPECT_LE(l1_distance(row, full.row(i)), 1e-12);
    }
}

TEST(MaskedAttention, SelfOnlyReturnsOwnValue) {
    const auto inp = seeded(10, 4, 10);
    for (std::size_t i = 0; i < 10; ++i) {
        const auto row = masked_attention(inp, TokenIndexSet::range(i, i + 1), i, Causal::on);
        for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(row[c], inp.v(i, c), 1e-15);
    }
}

TEST(MaskedAttention, SeededMatchesRenormalizationOracle) {
    const auto inp = seeded(16, 5, 11);
    Rng rng(Seed{99});
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::size_t> kept;
        while (kept.size() < 6) {
            const auto j = rng.below(16);
            if (std::find(kept.begin(), kept.end(), j) == kept.end()) kept.push_back(j);
        }
        const auto set = TokenIndexSet::from_unsorted(kept, 16);
        for (bool causal : {false, true}) {
            const std::size_t q = causal ? set.indices().back() + rng.below(16 - set.indices().back())
                                         : rng.below(16);
            const auto got = masked_attention(inp, set, q, causal ? Causal::on : Causal::off);
            const auto want = oracle::masked_attention(
                inp, std::vector<std::size_t>(set.begin(), set.end()), q, causal);
            EXPECT_LE(l1_distance(got, want), 1e-9);
        }
    }
}

TEST(MaskedAttention, ZeroedValueFormEqualsRenormalizedForm) {
    const auto inp = seeded(14, 3, 12);
    const auto kept = TokenIndexSet::from_sorted({0, 3, 4, 9, 13}, 14);
    for (std::size_t i = 0; i < 14; ++i) {
        const auto s = masked_probabilities(inp, kept, i, Causal::on);
        Tensor2D vz = inp.v;
        for (std::size_t j = 0; j < 14; ++j)
            if (!kept.contains(j))
                for (std::size_t c = 0; c < 3; ++c) vz(j, c) = 0.0;
        const auto zeroed = oracle::mix(s, vz);
        const auto renorm = masked_attention(inp, kept, i, Causal::on);
        EXPECT_LE(l1_distance(zeroed, renorm), 1e-12);
    }
}

TEST(MaskedAttention, NothingVisibleIsContractViolation) {
    const auto inp = seeded(8, 2, 13);
    EXPECT_THROW(masked_attention(inp, TokenIndexSet::range(5, 8), 2, Causal::on), ContractViolation);
    EXPECT_THROW(masked_attention(inp, TokenIndexSet{}, 7, Causal::off), ContractViolation);
}

TEST(GammaMass, Basics) {
    const std::vector<double> row(10, 0.1);
    EXPECT_EQ(gamma_mass(row, TokenIndexSet::all(10)), 0.0);
    EXPECT_NEAR(gamma_mass(row, TokenIndexSet{}), 1.0, 1e-15);
    EXPECT_NEAR(gamma_mass(row, TokenIndexSet::from_sorted({1, 4, 6, 8}, 10)), 0.6, 1e-15);
}

TEST(GammaMass, ComplementsSumToOneAndMatchNormalizerRatio) {
    const auto inp = seeded(24, 6, 14);
    const auto a = full_attention_scores(inp, Causal::on);
    const auto kept = TokenIndexSet::from_sorted({0, 2, 5, 11, 17, 23}, 24);
    const auto rest = kept.complement(24);
    for (std::size_t i = 0; i < 24; ++i) {
        const double g = gamma_mass(a, kept, i);
        EXPECT_NEAR(g + gamma_mass(a, rest, i), 1.0, 1e-12);
        // gamma == (Z - Z~) / Z with normalizers taken over the causal row.
        const auto x = oracle::logits(inp, i);
        double z = 0.0, zk = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
            z += std::exp(x[j]);
            if (kept.contains(j)) zk += std::exp(x[j]);
        }
        EXPECT_NEAR(g, (z - zk) / z, 1e-12);
    }
}

TEST(TokenIndexSet, ValidationAndAlgebra) {
    EXPECT_THROW(TokenIndexSet::from_sorted({2, 1}, 5), ContractViolation);
    EXPECT_THROW(TokenIndexSet::from_sorted({1, 1}, 5), ContractViolation);
    EXPECT_THROW(TokenIndexSet::from_sorted({5}, 5), ContractViolation);
    const auto a = TokenIndexSet::from_unsorted({4, 1, 4, 0}, 6);
    EXPECT_EQ(std::vector<std::size_t>(a.begin(), a.end()), (std::vector<std::size_t>{0, 1, 4}));
    const auto b = TokenIndexSet::range(3, 6);
    EXPECT_EQ(a.united(b), TokenIndexSet::from_sorted({0, 1, 3, 4, 5}, 6));
    EXPECT_EQ(a.intersected(b), TokenIndexSet::from_sorted({4}, 6));
    EXPECT_EQ(a.complement(6), TokenIndexSet::from_sorted({2, 3, 5}, 6));
    EXPECT_EQ(a.causal_prefix(3), TokenIndexSet::from_sorted({0, 1}, 6));
    EXPECT_EQ(a.visible_with_self(3), TokenIndexSet::from_sorted({0, 1, 3}, 6));
    EXPECT_EQ(a.count_through(4), 3u);
}

}  // namespace
}  // namespace tca
