// SPDX-License-Identifier: Apache-2.0
#include "tca/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "tca/head_config_table.hpp"

namespace tca {

std::string_view to_string(TensorFileErrc code) noexcept {
    switch (code) {
        case TensorFileErrc::bad_magic: return "bad magic";
        case TensorFileErrc::version_mismatch: return "version mismatch";
        case TensorFileErrc::truncated: return "truncated payload";
        case TensorFileErrc::dim_overflow: return "dimension overflow";
        case TensorFileErrc::trailing_data: return "trailing data";
        case TensorFileErrc::unsupported_rank: return "unsupported rank";
        case TensorFileErrc::open_failed: return "open failed";
        case TensorFileErrc::write_failed: return "write failed";
    }
    return "unknown";
}

namespace {

constexpr char kMagic[4] = {'T', 'C', 'A', 'T'};

[[noreturn]] void fail(TensorFileErrc code, const std::string& detail) {
    throw TensorFileError(code, std::string(to_string(code)) + ": " + detail);
}

template <class U>
void put_le(std::string& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
    }
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <class U>
    U get_le(const char* what) {
        if (remaining() < sizeof(U)) fail(TensorFileErrc::truncated, std::string("missing ") + what);
        U value = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(U);
        return value;
    }

    std::string_view take(std::size_t n) {
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::uint64_t element_count(std::span<const std::uint64_t> dims) {
    std::uint64_t count = 1;
    for (std::uint64_t d : dims) {
        if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / d) {
            fail(TensorFileErrc::dim_overflow, "element count exceeds 64 bits");
        }
        count *= d;
    }
    if (count > std::numeric_limits<std::uint64_t>::max() / 4) {
        fail(TensorFileErrc::dim_overflow, "payload size exceeds 64 bits");
    }
    return count;
}

}  // namespace

std::string encode_tensor_file(const TensorFile& file) {
    if (file.dims.empty() || file.dims.size() > TensorFile::kMaxRank) {
        fail(TensorFileErrc::unsupported_rank, std::to_string(file.dims.size()) + " dimensions");
    }
    if (element_count(file.dims) != file.payload.size()) {
        fail(TensorFileErrc::dim_overflow, "payload length does not match dims");
    }
    std::string out(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, TensorFile::kFormatVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.dims.size()));
    for (std::uint64_t d : file.dims) put_le<std::uint64_t>(out, d);
    out.reserve(out.size() + 4 * file.payload.size());
    for (float x : file.payload) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
    return out;
}

TensorFile decode_tensor_file(std::string_view bytes) {
    Reader in(bytes);
    if (in.remaining() < sizeof kMagic) fail(TensorFileErrc::truncated, "file shorter than magic");
    if (std::memcmp(in.take(sizeof kMagic).data(), kMagic, sizeof kMagic) != 0) {
        fail(TensorFileErrc::bad_magic, "expected \"TCAT\"");
    }
    const auto version = in.get_le<std::uint32_t>("format_version");
    if (version != TensorFile::kFormatVersion) {
        fail(TensorFileErrc::version_mismatch,
             "format_version " + std::to_string(version) + ", expected 1");
    }
    const auto ndim = in.get_le<std::uint32_t>("ndim");
    if (ndim == 0) fail(TensorFileErrc::unsupported_rank, "zero dimensions");
    if (ndim > TensorFile::kMaxRank) {
        fail(TensorFileErrc::dim_overflow, std::to_string(ndim) + " dimensions");
    }
    TensorFile file;
    for (std::uint32_t i = 0; i < ndim; ++i) file.dims.push_back(in.get_le<std::uint64_t>("dims"));
    const std::uint64_t count = element_count(file.dims);
    if (in.remaining() < count * 4) {
        fail(TensorFileErrc::truncated, "payload has " + std::to_string(in.remaining()) +
                                            " bytes, expected " + std::to_string(count * 4));
    }
    file.payload.resize(static_cast<std::size_t>(count));
    for (auto& x : file.payload) x = std::bit_cast<float>(in.get_le<std::uint32_t>("payload"));
    if (in.remaining() != 0) {
        fail(TensorFileErrc::trailing_data, std::to_string(in.remaining()) + " extra bytes");
    }
    return file;
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
    std::string bytes;
    try {
        bytes = read_file(path);
    } catch (const IoError&) {
        fail(TensorFileErrc::open_failed, path.string());
    }
    try {
        return decode_tensor_file(bytes);
    } catch (const TensorFileError& e) {
        throw TensorFileError(e.code(), path.string() + ": " + e.what());
    }
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
    const auto bytes = encode_tensor_file(file);
    try {
        write_file_atomic(path, bytes);
    } catch (const IoError& e) {
        fail(TensorFileErrc::write_failed, e.what());
    }
}

void write_tensor(const std::filesystem::path& path, const Tensor2D& t) {
    TensorStack stack;
    stack.items.push_back(t);
    write_tensor_stack(path, stack);
}

Tensor2D read_tensor(const std::filesystem::path& path) {
    auto file = read_tensor_file(path);
    if (file.dims.size() != 2) {
        fail(TensorFileErrc::unsupported_rank,
             path.string() + " has " + std::to_string(file.dims.size()) + " dimensions, expected 2");
    }
    std::vector<double> data(file.payload.begin(), file.payload.end());
    return Tensor2D(file.dims[0], file.dims[1], std::move(data));
}

void write_tensor_stack(const std::filesystem::path& path, const TensorStack& stack) {
    if (stack.items.empty() || stack.items.size() != stack.layers * stack.heads) {
        throw ShapeError("tensor stack holds " + std::to_string(stack.items.size()) +
                         " matrices for " + std::to_string(stack.layers) + " layers x " +
                         std::to_string(stack.heads) + " heads");
    }
    const std::size_t rows = stack.items.front().rows();
    const std::size_t cols = stack.items.front().cols();
    TensorFile file;
    if (stack.layers > 1) file.dims.push_back(stack.layers);
    if (stack.layers > 1 || stack.heads > 1) file.dims.push_back(stack.heads);
    file.dims.push_back(rows);
    file.dims.push_back(cols);
    file.payload.reserve(stack.items.size() * rows * cols);
    for (const auto& t : stack.items) {
        if (t.rows() != rows || t.cols() != cols) throw ShapeError("tensor stack shapes differ");
        for (double x : t.data()) file.payload.push_back(static_cast<float>(x));
    }
    write_tensor_file(path, file);
}

TensorStack read_tensor_stack(const std::filesystem::path& path) {
    const auto file = read_tensor_file(path);
    const std::size_t rank = file.dims.size();
    if (rank < 2 || rank > 4) {
        fail(TensorFileErrc::unsupported_rank,
             path.string() + " has " + std::to_string(rank) + " dimensions, expected 2 to 4");
    }
    TensorStack stack;
    stack.layers = rank == 4 ? file.dims[0] : 1;
    stack.heads = rank >= 3 ? file.dims[rank - 3] : 1;
    const std::size_t rows = file.dims[rank - 2];
    const std::size_t cols = file.dims[rank - 1];
    const std::size_t per = rows * cols;
    for (std::size_t n = 0; n < stack.layers * stack.heads; ++n) {
        std::vector<double> data(file.payload.begin() + static_cast<std::ptrdiff_t>(n * per),
                                 file.payload.begin() + static_cast<std::ptrdiff_t>((n + 1) * per));
        stack.items.emplace_back(rows, cols, std::move(data));
    }
    return stack;
}

}  // namespace tca
