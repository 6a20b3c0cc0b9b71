// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace tca {

/// Allowable per-block retain counts {1, 2, 4, ..., b} for a power-of-two block size b >= 2.
class RetainCountSet {
public:
    explicit RetainCountSet(std::size_t block_size);

    std::size_t block_size() const noexcept { return block_size_; }
    const std::vector<std::size_t>& counts() const noexcept { return counts_; }
    std::size_t size() const noexcept { return counts_.size(); }

private:
    std::size_t block_size_;
    std::vector<std::size_t> counts_;
};

bool is_power_of_two(std::size_t n) noexcept;

/// Distribution over per-block retain counts. probabilities[n] belongs to
/// retain count 2^n. mu/sigma are present when the configuration came from
/// the log-Gaussian generator.
struct SparsityConfig {
    std::size_t block_size = 0;
    std::vector<double> probabilities;
    std::optional<double> mu;
    std::optional<double> sigma;

    /// Explicit distribution; validated (nonnegative, sums to 1 within 1e-9).
    static SparsityConfig from_probabilities(std::size_t block_size, std::vector<double> p);
    /// All mass on retain count b: every block is kept whole.
    static SparsityConfig dense(std::size_t block_size);

    RetainCountSet retain_counts() const { return RetainCountSet(block_size); }
    /// sum_k k * p_k
    double expected_budget() const;
    void validate() const;

    friend bool operator==(const SparsityConfig&, const SparsityConfig&) = default;
};

/// p_k proportional to exp(-(log2 k - mu)^2 / (2 sigma^2)) over k in {1, 2, ..., b}.
SparsityConfig make_config(std::size_t block_size, double mu, double sigma);

/// M candidates with mu_i = log2(1 + (i - 1)(b - 1)/(M - 1)), i = 1..M, so the
/// sweep runs from mu = 0 to mu = log2(b).
struct CandidateSet {
    std::vector<SparsityConfig> configs;

    std::size_t size() const noexcept { return configs.size(); }
    const SparsityConfig& operator[](std::size_t i) const { return configs[i]; }
};

double candidate_mu(std::size_t block_size, std::size_t count, std::size_t index);
CandidateSet generate_candidates(std::size_t block_size, std::size_t count, double sigma);

/// Per-block survivors during decoding: floor(expected budget), at least 1.
std::size_t decode_budget(const SparsityConfig& cfg);

}  // namespace tca
