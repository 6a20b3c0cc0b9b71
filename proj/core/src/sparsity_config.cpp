// SPDX-License-Identifier: Apache-2.0
#include "tca/sparsity_config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tca/error.hpp"

namespace tca {

namespace {

// Absorbs representation error in quantities that are integers in exact
// arithmetic (e.g. 4 * 0.25 * m) before they are floored.
constexpr double kFloorSlack = 1e-9;

}  // namespace

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

RetainCountSet::RetainCountSet(std::size_t block_size) : block_size_(block_size) {
    if (block_size < 2 || !is_power_of_two(block_size)) {
        throw ParameterError("block size must be a power of two >= 2, got " +
                             std::to_string(block_size));
    }
    for (std::size_t k = 1; k <= block_size; k *= 2) counts_.push_back(k);
}

SparsityConfig SparsityConfig::from_probabilities(std::size_t block_size, std::vector<double> p) {
    SparsityConfig cfg;
    cfg.block_size = block_size;
    cfg.probabilities = std::move(p);
    cfg.validate();
    return cfg;
}

SparsityConfig SparsityConfig::dense(std::size_t block_size) {
    RetainCountSet counts(block_size);
    std::vector<double> p(counts.size(), 0.0);
    p.back() = 1.0;
    return from_probabilities(block_size, std::move(p));
}

double SparsityConfig::expected_budget() const {
    double e = 0.0;
    std::size_t k = 1;
    for (double pk : probabilities) {
        e += static_cast<double>(k) * pk;
        k *= 2;
    }
    return e;
}

void SparsityConfig::validate() const {
    RetainCountSet counts(block_size);
    if (probabilities.size() != counts.size()) {
        throw ParameterError("configuration has " + std::to_string(probabilities.size()) +
                             " probabilities, expected " + std::to_string(counts.size()));
    }
    double total = 0.0;
    for (double pk : probabilities) {
        if (!(pk >= 0.0) || !std::isfinite(pk)) throw ParameterError("negative or non-finite p_k");
        total += pk;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ParameterError("configuration probabilities sum to " + std::to_string(total));
    }
    if (sigma && !(*sigma > 0.0)) throw ParameterError("sigma must be positive");
}

SparsityConfig make_config(std::size_t block_size, double mu, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ParameterError("sigma must be a positive finite value");
    }
    if (!std::isfinite(mu)) throw ParameterError("mu must be finite");
    RetainCountSet counts(block_size);

    // Exponents are shifted by their max before exponentiation; the shift is a
    // positive common factor on every Phi and cancels in the normalization.
    std::vector<double> exponent;
    exponent.reserve(counts.size());
    for (std::size_t k : counts.counts()) {
        const double x = std::log2(static_cast<double>(k)) - mu;
        exponent.push_back(-(x * x) / (2.0 * sigma * sigma));
    }
    const double peak = *std::max_element(exponent.begin(), exponent.end());
    std::vector<double> p;
    p.reserve(exponent.size());
    double total = 0.0;
    for (double e : exponent) {
        p.push_back(std::exp(e - peak));
        total += p.back();
    }
    for (double& pk : p) pk /= total;

    SparsityConfig cfg;
    cfg.block_size = block_size;
    cfg.probabilities = std::move(p);
    cfg.mu = mu;
    cfg.sigma = sigma;
    return cfg;
}

double candidate_mu(std::size_t block_size, std::size_t count, std::size_t index) {
    if (count < 2) throw ParameterError("need at least 2 candidates");
    if (index >= count) throw ParameterError("candidate index out of range");
    const double step = static_cast<double>(index) * static_cast<double>(block_size - 1) /
                        static_cast<double>(count - 1);
    return std::log2(1.0 + step);
}

CandidateSet generate_candidates(std::size_t block_size, std::size_t count, double sigma) {
    if (count < 2) throw ParameterError("need at least 2 candidates, got " + std::to_string(count));
    CandidateSet set;
    set.configs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        set.configs.push_back(make_config(block_size, candidate_mu(block_size, count, i), sigma));
    }
    return set;
}

std::size_t decode_budget(const SparsityConfig& cfg) {
    const double t = std::floor(cfg.expected_budget() + kFloorSlack);
    return std::clamp<std::size_t>(static_cast<std::size_t>(t), 1, cfg.block_size);
}

}  // namespace tca
