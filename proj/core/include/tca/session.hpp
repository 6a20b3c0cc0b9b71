// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tca/attention_oracle.hpp"
#include "tca/flop_counter.hpp"
#include "tca/head_config_table.hpp"
#include "tca/tensor.hpp"

namespace tca {

/// Seeded source of decode-time (q, k, v) triples. Each head draws from its
/// own stream, so output is independent of how heads are scheduled.
class SyntheticQkvSource {
public:
    SyntheticQkvSource(Seed seed, std::size_t head_index, std::size_t head_dim);

    struct Token {
        std::vector<double> q, k, v;
    };
    Token next();

private:
    Rng rng_;
    std::size_t head_dim_;
};

struct HeadInput {
    HeadKey key;
    AttentionInputs inputs;
};

struct SessionOptions {
    std::size_t decode_steps = 0;
    Seed seed{0};
    /// Compare against exact attention and record gamma and L1 error.
    bool oracle = true;
    std::size_t jobs = 1;
};

/// One line of the trace. Step 0 is the prefill; step s >= 1 is decode step s.
/// Sizes are summed over heads; gamma and l1_error are the worst head.
struct StepRecord {
    std::size_t step = 0;
    std::string phase;
    std::size_t position = 0;
    std::size_t cache_size = 0;
    double retained_fraction = 0.0;
    std::optional<double> gamma;
    std::optional<double> l1_error;
};

struct HeadSummary {
    HeadKey key;
    std::size_t length = 0;
    std::size_t global_count = 0;
    std::size_t local_count = 0;
    std::size_t decode_budget = 0;
    double retained_fraction = 0.0;
};

struct SessionTrace {
    std::vector<StepRecord> records;
    std::vector<HeadSummary> heads;
    FlopCounter prefill_flops;
    /// Per-head cache sizes, heads x (steps + 1).
    std::vector<std::vector<std::size_t>> head_cache_sizes;
};

/// Prefill every head with its table configuration, then decode
/// options.decode_steps tokens per head. Throws ConfigError if the table
/// misses a head.
SessionTrace run_session(const std::vector<HeadInput>& heads, const HeadConfigTable& table,
                         const SessionOptions& options);

/// One JSON object per line.
std::string serialize_trace(const SessionTrace& trace);

}  // namespace tca
