// SPDX-License-Identifier: Apache-2.0
#include "tca/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tca/error.hpp"

namespace tca {

namespace {

std::string shape_str(const Tensor2D& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
}

Tensor2D Tensor2D::identity(std::size_t n) {
    Tensor2D t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Tensor2D Tensor2D::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    std::vector<double> flat;
    flat.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged rows in Tensor2D::from_rows");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return Tensor2D(r, c, std::move(flat));
}

bool Tensor2D::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
    std::uint64_t z = parent + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Rng::Rng(Seed seed) : engine_(seed.value) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(theta);
    has_spare_ = true;
    return radius * std::cos(theta);
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw ParameterError("Rng::below requires n > 0");
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
}

Tensor2D random_tensor(std::size_t rows, std::size_t cols, Seed seed, Distribution dist) {
    if (rows == 0 || cols == 0) throw ParameterError("random_tensor requires rows, cols >= 1");
    Rng rng(seed);
    Tensor2D t(rows, cols);
    for (double& x : t.data()) {
        x = dist == Distribution::uniform ? rng.uniform(-1.0, 1.0) : rng.gaussian();
    }
    return t;
}

Tensor2D transpose(const Tensor2D& a) {
    Tensor2D t(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
    return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
    return acc;
}

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
    }
    Tensor2D out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    }
    return out;
}

Tensor2D matmul_transposed(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_transposed: " + shape_str(a) + " x " + shape_str(b) + "^T");
    }
    Tensor2D out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
    return out;
}

Tensor2D scale(const Tensor2D& a, double factor) {
    Tensor2D out = a;
    for (double& x : out.data()) x *= factor;
    return out;
}

void softmax_prefix(std::span<double> row, std::size_t visible) {
    if (visible == 0) throw ContractViolation("softmax over an all-masked row");
    if (visible > row.size()) throw ShapeError("softmax_prefix: visible exceeds row length");
    double peak = row[0];
    for (std::size_t j = 1; j < visible; ++j) peak = std::max(peak, row[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < visible; ++j) {
        row[j] = std::exp(row[j] - peak);
        total += row[j];
    }
    for (std::size_t j = 0; j < visible; ++j) row[j] /= total;
    std::fill(row.begin() + static_cast<std::ptrdiff_t>(visible), row.end(), 0.0);
}

Tensor2D softmax_rows(const Tensor2D& a, Causal causal) {
    if (a.rows() == 0) throw ShapeError("softmax_rows: empty input");
    if (causal == Causal::on && a.rows() > a.cols()) {
        throw ShapeError("softmax_rows: causal mask needs rows <= cols, got " + shape_str(a));
    }
    Tensor2D out = a;
    const std::size_t offset = a.cols() - (causal == Causal::on ? a.rows() : 0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const std::size_t visible = causal == Causal::on ? offset + i + 1 : a.cols();
        softmax_prefix(out.row(i), visible);
    }
    return out;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("l1_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) acc += std::abs(a[j] - b[j]);
    return acc;
}

double l1_row_distance(const Tensor2D& a, const Tensor2D& b, std::size_t row) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError("l1_row_distance: " + shape_str(a) + " vs " + shape_str(b));
    }
    if (row >= a.rows()) throw ShapeError("l1_row_distance: row out of range");
    return l1_distance(a.row(row), b.row(row));
}

double max_abs(const Tensor2D& a) noexcept {
    double m = 0.0;
    for (double x : a.data()) m = std::max(m, std::abs(x));
    return m;
}

double max_abs_diff(const Tensor2D& a, const Tensor2D& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError("max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace tca
