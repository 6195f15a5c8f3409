// ----------------------------------------------------------------------------
// Copyright 2026 The PEGO Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#include "pego/numerics/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <thread>

#include "pego/errors.hpp"

namespace pego::numerics {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
    }
}

// Splits [0, rows) into contiguous chunks; each output row is produced by
// exactly one worker with the same arithmetic as the serial path.
template <typename RowFn>
void for_each_row(std::size_t rows, std::size_t work, RowFn&& fn) {
    constexpr std::size_t kParallelThreshold = std::size_t{1} << 21;
    const std::size_t threads = std::min(numeric_threads(), rows);
    if (threads <= 1 || work < kParallelThreshold) {
        for (std::size_t r = 0; r < rows; ++r) fn(r);
        return;
    }
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    const std::size_t chunk = (rows + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(rows, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([begin, end, &fn] {
            for (std::size_t r = begin; r < end; ++r) fn(r);
        });
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not match shape (" + std::to_string(rows) + ", " +
                         std::to_string(cols) + ")");
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer list");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

std::vector<double> Matrix::col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

std::string Matrix::shape_string() const {
    return "(" + std::to_string(rows_) + ", " + std::to_string(cols_) + ")";
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "sub");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
}

bool Matrix::bitwise_equal(const Matrix& other) const noexcept {
    return same_shape(other) &&
           (data_.empty() ||
            std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0);
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ, lhs " + a.shape_string() + " rhs " +
                         b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t n = a.cols();
    const std::size_t m = b.cols();
    const double* bp = b.values().data();
    const double* ap = a.values().data();
    double* op = out.values().data();
    for_each_row(a.rows(), a.rows() * n * m, [&](std::size_t i) {
        double* __restrict dst = op + i * m;
        const double* arow = ap + i * n;
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = arow[k];
            const double* __restrict src = bp + k * m;
            for (std::size_t j = 0; j < m; ++j) dst[j] += aik * src[j];
        }
    });
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: row counts differ, lhs " + a.shape_string() + " rhs " +
                         b.shape_string());
    }
    Matrix out(a.cols(), b.cols());
    const std::size_t m = b.cols();
    const std::size_t ac = a.cols();
    const double* ap = a.values().data();
    const double* bp = b.values().data();
    double* op = out.values().data();
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* __restrict brow = bp + k * m;
        const double* arow = ap + k * ac;
        for (std::size_t i = 0; i < ac; ++i) {
            const double aki = arow[i];
            double* __restrict dst = op + i * m;
            for (std::size_t j = 0; j < m; ++j) dst[j] += aki * brow[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: column counts differ, lhs " + a.shape_string() + " rhs " +
                         b.shape_string());
    }
    Matrix out(a.rows(), b.rows());
    for_each_row(a.rows(), a.rows() * a.cols() * b.rows(), [&](std::size_t i) {
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(arow, b.row(j));
    });
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

double l1_entrywise(const Matrix& m) {
    double s = 0.0;
    for (double x : m.values()) s += std::fabs(x);
    return s;
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double x : m.values()) s += x * x;
    return std::sqrt(s);
}

double max_abs(const Matrix& m) {
    double s = 0.0;
    for (double x : m.values()) s = std::max(s, std::fabs(x));
    return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::fabs(a[i] - b[i]));
    return s;
}

bool all_finite(const Matrix& m) {
    return std::all_of(m.values().begin(), m.values().end(),
                       [](double x) { return std::isfinite(x); });
}

Matrix softmax_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto in = m.row(r);
        auto dst = out.row(r);
        const double mx = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            dst[c] = std::exp(in[c] - mx);
            sum += dst[c];
        }
        for (double& x : dst) x /= sum;
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    const double nu = norm2(u);
    const double nv = norm2(v);
    if (nu == 0.0 || nv == 0.0) {
        throw DegenerateInputError("cosine_similarity: zero-norm input");
    }
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

std::size_t numeric_threads() {
    static const std::size_t threads = [] {
        const char* env = std::getenv("PEGO_THREADS");
        if (env == nullptr) return std::size_t{1};
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        return (end != env && v > 0) ? static_cast<std::size_t>(v) : std::size_t{1};
    }();
    return threads;
}

}  // namespace pego::numerics
