// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "tca/core_selection.hpp"
#include "tca/sparsity_config.hpp"

namespace tca {

struct HeadKey {
    std::size_t layer = 0;
    std::size_t head = 0;

    friend auto operator<=>(const HeadKey&, const HeadKey&) = default;
};

std::string to_string(const HeadKey& key);

struct HeadEntry {
    SparsityConfig chosen;
    double aggregated_score = 0.0;
    std::size_t kept_count = 0;
    /// 1-based position in the candidate sweep (1 = sparsest generator).
    std::size_t candidate_index = 0;
    /// No candidate reached tau; the densest one was taken instead.
    bool fallback = false;

    friend bool operator==(const HeadEntry&, const HeadEntry&) = default;
};

struct TableMetadata {
    std::size_t block_size = 128;
    std::size_t window = 4096;
    double tau = 0.9;
    double sigma = 1.0;
    std::size_t candidates = 14;
    double alpha = 0.5;
    RedundancyIndex index = RedundancyIndex::hhi;
    std::uint64_t seed = 0;
    std::string created_at;

    friend bool operator==(const TableMetadata&, const TableMetadata&) = default;
};

/// Calibrated configuration per (layer, head).
class HeadConfigTable {
public:
    static constexpr int kFormatVersion = 1;

    TableMetadata metadata;
    std::map<HeadKey, HeadEntry> entries;

    /// Throws ConfigError when the head was never calibrated.
    const HeadEntry& at(const HeadKey& key) const;
    bool contains(const HeadKey& key) const { return entries.contains(key); }
    SelectionParams selection_params() const;

    friend bool operator==(const HeadConfigTable&, const HeadConfigTable&) = default;
};

/// Pretty-printed JSON tree with a top-level "format_version": 1.
std::string serialize_table(const HeadConfigTable& table);
/// Throws IoError on malformed text or an unsupported format_version.
HeadConfigTable parse_table(const std::string& text);

/// Writes via a temporary file in the same directory followed by rename.
void write_table(const std::filesystem::path& path, const HeadConfigTable& table);
HeadConfigTable read_table(const std::filesystem::path& path);

/// Writes `contents` to `path` atomically (temp file + rename). Shared by all
/// file writers in the library.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace tca
