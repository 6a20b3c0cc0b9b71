// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tca/error.hpp"
#include "tca/tensor.hpp"

namespace tca {

// Binary layout, all integers little-endian:
//
//   offset  size        field
//   0       4           magic "TCAT"
//   4       4           format_version (u32) == 1
//   8       4           ndim (u32)
//   12      8 * ndim    dims (u64 each)
//   ...     4 * prod    payload, row-major IEEE-754 binary32
//
// Exactly prod(dims) * 4 payload bytes follow the header.

enum class TensorFileErrc {
    bad_magic = 1,
    version_mismatch,
    truncated,
    dim_overflow,
    trailing_data,
    unsupported_rank,
    open_failed,
    write_failed,
};

std::string_view to_string(TensorFileErrc code) noexcept;

class TensorFileError : public IoError {
public:
    TensorFileError(TensorFileErrc code, const std::string& what)
        : IoError(what), code_(code) {}
    TensorFileErrc code() const noexcept { return code_; }

private:
    TensorFileErrc code_;
};

struct TensorFile {
    static constexpr std::uint32_t kFormatVersion = 1;
    static constexpr std::uint32_t kMaxRank = 8;

    std::vector<std::uint64_t> dims;
    std::vector<float> payload;
};

std::string encode_tensor_file(const TensorFile& file);
/// Throws TensorFileError with the matching code on malformed input.
TensorFile decode_tensor_file(std::string_view bytes);

TensorFile read_tensor_file(const std::filesystem::path& path);
/// Atomic: temp file + rename.
void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);

/// 2-D convenience wrappers. Values pass through binary32 on the way out.
void write_tensor(const std::filesystem::path& path, const Tensor2D& t);
Tensor2D read_tensor(const std::filesystem::path& path);

/// A stack of equally shaped matrices, stored as [L, d] (one head),
/// [heads, L, d] or [layers, heads, L, d].
struct TensorStack {
    std::size_t layers = 1;
    std::size_t heads = 1;
    std::vector<Tensor2D> items;  // layer-major
};

void write_tensor_stack(const std::filesystem::path& path, const TensorStack& stack);
TensorStack read_tensor_stack(const std::filesystem::path& path);

}  // namespace tca
