// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tca/attention_oracle.hpp"
#include "tca/tensor.hpp"

namespace tca {

enum class PatternFamily { uniform, bipolar, terminal_bias, attention_sink, sparse_activation };

inline constexpr std::array<PatternFamily, 5> kAllPatternFamilies = {
    PatternFamily::uniform, PatternFamily::bipolar, PatternFamily::terminal_bias,
    PatternFamily::attention_sink, PatternFamily::sparse_activation};

std::string_view to_string(PatternFamily family) noexcept;
/// Accepts the names produced by to_string; throws ParameterError otherwise.
PatternFamily parse_pattern_family(std::string_view name);

struct PatternSpec {
    PatternFamily family = PatternFamily::uniform;
    std::size_t length = 512;
    std::size_t head_dim = 64;
    Seed seed{0};
    /// In (0, 1]. Sets the strength of the family's structure; key noise is
    /// gaussian with standard deviation (1 - intensity).
    double intensity = 0.9;

    /// Throws ParameterError unless length >= 4, head_dim >= 2 and intensity in (0, 1].
    void validate() const;
};

/// Width, in positions, of the recency band used by terminal_bias and bipolar.
inline constexpr double kBandWidth = 16.0;

/// Builds Q, K, V whose causal attention shows the requested family.
///
/// The first two coordinates of every query and key carry a template; the
/// remaining coordinates hold gaussian queries and noise keys. With
/// g = d_h^(1/4), query i is (g, -g r i, ...) and key j is
/// (g (bias_j + r j), g [r > 0 and j is not a sink], ...), so the template
/// logit is bias_j + r (j - i):
///
///   uniform            bias = 0, r = 0
///   attention_sink     bias_0 = ln(odds L), so row mass on token 0 is >= intensity
///   terminal_bias      r = -ln(1 - intensity) / kBandWidth (mass outside the band ~ 1 - intensity)
///   bipolar            terminal_bias plus a sink weighted to hold half the row mass
///   sparse_activation  n = max(1, L / 32) seeded hot columns with bias ln(odds L / n)
///
/// where odds = intensity / max(1 - intensity, 1e-3). V is standard gaussian.
AttentionInputs generate_pattern(const PatternSpec& spec);

/// Hot columns of the sparse_activation family for this spec, ascending.
std::vector<std::size_t> hot_columns(const PatternSpec& spec);

/// A set of heads stored as three tensor files <prefix>.q.tcat, <prefix>.k.tcat, <prefix>.v.tcat.
struct QkvStack {
    std::size_t layers = 1;
    std::size_t heads = 1;
    std::vector<AttentionInputs> items;  // layer-major
};

std::array<std::filesystem::path, 3> qkv_paths(const std::string& prefix);
void write_qkv(const std::string& prefix, const QkvStack& stack);
/// Throws TensorFileError on malformed files and ShapeError if the three files disagree.
QkvStack read_qkv(const std::string& prefix);

}  // namespace tca
