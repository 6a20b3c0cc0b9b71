// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tca {

/// Dense row-major matrix of doubles. Carrier for Q, K, V and attention
/// probability matrices.
class Tensor2D {
public:
    Tensor2D() = default;
    Tensor2D(std::size_t rows, std::size_t cols, double fill = 0.0);
    /// Takes ownership of `data`; throws ShapeError unless data.size() == rows * cols.
    Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Tensor2D identity(std::size_t n);
    static Tensor2D from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor2D&, const Tensor2D&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// 64-bit seed. Identical seeds give bit-identical generated tensors.
struct Seed {
    std::uint64_t value = 0;
};

/// SplitMix64 step; used to derive independent child seeds from a parent.
std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t stream) noexcept;

enum class Distribution { uniform, gaussian };

/// Deterministic scalar source. Wraps std::mt19937_64 and maps its raw output
/// to uniform(-1, 1) / gaussian(0, 1) with explicit formulas so the sequence
/// does not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(Seed seed);

    double uniform01();          // [0, 1), 53 random bits
    double uniform(double lo, double hi);
    double gaussian();           // Box-Muller, N(0, 1)
    std::uint64_t next_u64();
    std::size_t below(std::size_t n);  // uniform integer in [0, n)

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

Tensor2D random_tensor(std::size_t rows, std::size_t cols, Seed seed, Distribution dist);

Tensor2D transpose(const Tensor2D& a);

/// Standard product with a fixed left-to-right summation order over the inner index.
Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);

/// a * b^T without materializing the transpose.
Tensor2D matmul_transposed(const Tensor2D& a, const Tensor2D& b);

Tensor2D scale(const Tensor2D& a, double factor);

double dot(std::span<const double> a, std::span<const double> b);

enum class Causal : bool { off = false, on = true };

/// Numerically stable row softmax. With Causal::on, row i is aligned with
/// column position (cols - rows + i) and entries to the right of it are exactly 0.
/// Masked entries never take part in the max/sum.
Tensor2D softmax_rows(const Tensor2D& a, Causal causal = Causal::off);

/// In-place stable softmax over the first `visible` entries of `row`; the
/// remaining entries are set to 0. Throws ContractViolation if visible == 0.
void softmax_prefix(std::span<double> row, std::size_t visible);

/// sum_j |a[row, j] - b[row, j]|
double l1_row_distance(const Tensor2D& a, const Tensor2D& b, std::size_t row);
double l1_distance(std::span<const double> a, std::span<const double> b);

double max_abs(const Tensor2D& a) noexcept;
double max_abs_diff(const Tensor2D& a, const Tensor2D& b);

}  // namespace tca
