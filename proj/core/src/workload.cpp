// SPDX-License-Identifier: Apache-2.0
#include "tca/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tca/error.hpp"
#include "tca/tensor_file.hpp"

namespace tca {

std::string_view to_string(PatternFamily family) noexcept {
    switch (family) {
        case PatternFamily::uniform: return "uniform";
        case PatternFamily::bipolar: return "bipolar";
        case PatternFamily::terminal_bias: return "terminal_bias";
        case PatternFamily::attention_sink: return "attention_sink";
        case PatternFamily::sparse_activation: return "sparse_activation";
    }
    return "unknown";
}

PatternFamily parse_pattern_family(std::string_view name) {
    for (auto f : kAllPatternFamilies) {
        if (to_string(f) == name) return f;
    }
    throw ParameterError("unknown pattern family '" + std::string(name) + "'");
}

void PatternSpec::validate() const {
    if (length < 4) throw ParameterError("pattern length must be at least 4");
    if (head_dim < 2) throw ParameterError("pattern head_dim must be at least 2");
    if (!(intensity > 0.0 && intensity <= 1.0)) {
        throw ParameterError("pattern intensity must lie in (0, 1]");
    }
}

namespace {

double odds(double intensity) { return intensity / std::max(1.0 - intensity, 1e-3); }

double ramp_slope(double intensity) {
    return -std::log(std::max(1.0 - intensity, 1e-3)) / kBandWidth;
}

// Independent streams so that changing one family's template never shifts
// another part of the draw.
enum Stream : std::uint64_t { kQueries = 1, kNoise = 2, kValues = 3, kHot = 4 };

}  // namespace

std::vector<std::size_t> hot_columns(const PatternSpec& spec) {
    spec.validate();
    const std::size_t n = std::max<std::size_t>(1, spec.length / 32);
    std::vector<std::size_t> pool(spec.length);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    Rng rng(Seed{mix_seed(spec.seed.value, kHot)});
    for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng.below(spec.length - i)]);
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
    return pool;
}

AttentionInputs generate_pattern(const PatternSpec& spec) {
    spec.validate();
    const std::size_t L = spec.length;
    const std::size_t d = spec.head_dim;
    const double n_l = static_cast<double>(L);

    std::vector<double> bias(L, 0.0);
    std::vector<bool> on_ramp(L, false);
    double r = 0.0;
    switch (spec.family) {
        case PatternFamily::uniform:
            break;
        case PatternFamily::attention_sink:
            bias[0] = std::log(odds(spec.intensity) * n_l);
            break;
        case PatternFamily::terminal_bias:
            r = ramp_slope(spec.intensity);
            std::fill(on_ramp.begin(), on_ramp.end(), true);
            break;
        case PatternFamily::bipolar:
            r = ramp_slope(spec.intensity);
            std::fill(on_ramp.begin() + 1, on_ramp.end(), true);
            // Band mass at the diagonal is sum_{n>=0} e^{-r n} = 1 / (1 - e^{-r}).
            bias[0] = -std::log(1.0 - std::exp(-r));
            break;
        case PatternFamily::sparse_activation: {
            const auto hot = hot_columns(spec);
            const double b = std::log(odds(spec.intensity) * n_l / static_cast<double>(hot.size()));
            for (auto j : hot) bias[j] = b;
            break;
        }
    }

    const double g = std::pow(static_cast<double>(d), 0.25);
    const double noise = 1.0 - spec.intensity;
    AttentionInputs out{Tensor2D(L, d), Tensor2D(L, d), Tensor2D(L, d)};
    Rng qrng(Seed{mix_seed(spec.seed.value, kQueries)});
    Rng krng(Seed{mix_seed(spec.seed.value, kNoise)});
    Rng vrng(Seed{mix_seed(spec.seed.value, kValues)});
    for (std::size_t i = 0; i < L; ++i) {
        const double pos = static_cast<double>(i);
        out.q(i, 0) = g;
        out.q(i, 1) = -g * r * pos;
        out.k(i, 0) = g * (bias[i] + (on_ramp[i] ? r * pos : 0.0));
        out.k(i, 1) = on_ramp[i] ? g : 0.0;
        for (std::size_t c = 2; c < d; ++c) {
            out.q(i, c) = qrng.gaussian();
            out.k(i, c) = noise * krng.gaussian();
        }
        for (std::size_t c = 0; c < d; ++c) out.v(i, c) = vrng.gaussian();
    }
    return out;
}

std::array<std::filesystem::path, 3> qkv_paths(const std::string& prefix) {
    return {prefix + ".q.tcat", prefix + ".k.tcat", prefix + ".v.tcat"};
}

void write_qkv(const std::string& prefix, const QkvStack& stack) {
    TensorStack q{stack.layers, stack.heads, {}};
    TensorStack k = q;
    TensorStack v = q;
    for (const auto& item : stack.items) {
        item.validate();
        q.items.push_back(item.q);
        k.items.push_back(item.k);
        v.items.push_back(item.v);
    }
    const auto paths = qkv_paths(prefix);
    write_tensor_stack(paths[0], q);
    write_tensor_stack(paths[1], k);
    write_tensor_stack(paths[2], v);
}

QkvStack read_qkv(const std::string& prefix) {
    const auto paths = qkv_paths(prefix);
    auto q = read_tensor_stack(paths[0]);
    auto k = read_tensor_stack(paths[1]);
    auto v = read_tensor_stack(paths[2]);
    if (q.layers != k.layers || q.layers != v.layers || q.heads != k.heads || q.heads != v.heads) {
        throw ShapeError("Q/K/V files under '" + prefix + "' disagree on layers or heads");
    }
    QkvStack out{q.layers, q.heads, {}};
    for (std::size_t n = 0; n < q.items.size(); ++n) {
        AttentionInputs item{std::move(q.items[n]), std::move(k.items[n]), std::move(v.items[n])};
        item.validate();
        out.items.push_back(std::move(item));
    }
    return out;
}

}  // namespace tca
