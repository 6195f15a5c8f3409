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

#include "pego/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pego/errors.hpp"

namespace pego::numerics {

namespace {

constexpr double kZeroSigma = 1e-10;

// Columns of `work` are rotated in place; `v` accumulates the rotations.
void jacobi_sweeps(Matrix& work, Matrix& v) {
    const std::size_t m = work.rows();
    const std::size_t n = work.cols();
    const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(m);
    for (int sweep = 0; sweep < kSvdMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t r = 0; r < m; ++r) {
                    const double wi = work(r, i);
                    const double wj = work(r, j);
                    alpha += wi * wi;
                    beta += wj * wj;
                    gamma += wi * wj;
                }
                if (gamma == 0.0 || std::fabs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double wi = work(r, i);
                    const double wj = work(r, j);
                    work(r, i) = c * wi - s * wj;
                    work(r, j) = s * wi + c * wj;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vi = v(r, i);
                    const double vj = v(r, j);
                    v(r, i) = c * vi - s * vj;
                    v(r, j) = s * vi + c * vj;
                }
            }
        }
        if (!rotated) return;
    }
    throw NumericError("svd: Jacobi iteration did not converge after " +
                       std::to_string(kSvdMaxSweeps) + " sweeps");
}

// Replaces columns [from, p) of u with unit vectors orthogonal to all
// previous columns.
void complete_basis(Matrix& u, std::size_t from) {
    const std::size_t m = u.rows();
    std::size_t candidate = 0;
    for (std::size_t c = from; c < u.cols(); ++c) {
        for (; candidate < m; ++candidate) {
            std::vector<double> e(m, 0.0);
            e[candidate] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < c; ++k) {
                    double proj = 0.0;
                    for (std::size_t r = 0; r < m; ++r) proj += u(r, k) * e[r];
                    for (std::size_t r = 0; r < m; ++r) e[r] -= proj * u(r, k);
                }
            }
            const double nrm = norm2(e);
            if (nrm > 1e-6) {
                for (std::size_t r = 0; r < m; ++r) u(r, c) = e[r] / nrm;
                ++candidate;
                break;
            }
        }
    }
}

SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    Matrix work = a;
    Matrix v = Matrix::identity(n);
    jacobi_sweeps(work, v);

    std::vector<double> sigma(n);
    for (std::size_t c = 0; c < n; ++c) sigma[c] = norm2(work.col(c));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
    const double cutoff =
        (sigma.empty() ? 0.0 : sigma[order[0]]) * std::numeric_limits<double>::epsilon() *
        static_cast<double>(std::max(m, n));
    std::size_t nonzero = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.singular_values[k] = sigma[src];
        for (std::size_t r = 0; r < n; ++r) out.right_vectors(r, k) = v(r, src);
        if (sigma[src] > cutoff && sigma[src] > 0.0) {
            for (std::size_t r = 0; r < m; ++r) out.left_vectors(r, k) = work(r, src) / sigma[src];
            nonzero = k + 1;
        }
    }
    complete_basis(out.left_vectors, nonzero);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t r = 0; r < m; ++r) {
            const double mag = std::fabs(out.left_vectors(r, k));
            if (mag > best) {
                best = mag;
                arg = r;
            }
        }
        if (out.left_vectors(arg, k) < 0.0) {
            for (std::size_t r = 0; r < m; ++r) out.left_vectors(r, k) = -out.left_vectors(r, k);
            for (std::size_t r = 0; r < n; ++r) out.right_vectors(r, k) = -out.right_vectors(r, k);
        }
    }
    return out;
}

}  // namespace

SvdResult svd(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) {
        throw ShapeError("svd: empty matrix " + m.shape_string());
    }
    if (!all_finite(m)) throw NumericError("svd: non-finite input");
    if (m.rows() >= m.cols()) return svd_tall(m);

    // Wide input: decompose the transpose and swap roles, then restore the
    // sign convention on the (new) left vectors.
    SvdResult t = svd_tall(transpose(m));
    SvdResult out{std::move(t.right_vectors), std::move(t.singular_values),
                  std::move(t.left_vectors)};
    for (std::size_t k = 0; k < out.singular_values.size(); ++k) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t r = 0; r < out.left_vectors.rows(); ++r) {
            const double mag = std::fabs(out.left_vectors(r, k));
            if (mag > best) {
                best = mag;
                arg = r;
            }
        }
        if (out.left_vectors(arg, k) < 0.0) {
            for (std::size_t r = 0; r < out.left_vectors.rows(); ++r)
                out.left_vectors(r, k) = -out.left_vectors(r, k);
            for (std::size_t r = 0; r < out.right_vectors.rows(); ++r)
                out.right_vectors(r, k) = -out.right_vectors(r, k);
        }
    }
    return out;
}

std::vector<double> explained_variance_ratio(const SvdResult& s, std::size_t k) {
    const auto& sv = s.singular_values;
    if (k > sv.size()) {
        throw ShapeError("explained_variance_ratio: k=" + std::to_string(k) + " exceeds " +
                         std::to_string(sv.size()) + " singular values");
    }
    if (sv.empty() || sv.front() == 0.0) {
        throw DegenerateInputError("explained_variance_ratio: all-zero matrix");
    }
    const double floor = kZeroSigma * sv.front();
    double total = 0.0;
    for (double x : sv)
        if (x > floor) total += x * x;
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        if (sv[i] > floor) out[i] = sv[i] * sv[i] / total;
    return out;
}

std::size_t numerical_rank(const std::vector<double>& singular_values, double rel_threshold) {
    if (singular_values.empty() || singular_values.front() == 0.0) return 0;
    const double cut = rel_threshold * singular_values.front();
    return static_cast<std::size_t>(std::count_if(singular_values.begin(), singular_values.end(),
                                                  [cut](double x) { return x > cut; }));
}

}  // namespace pego::numerics
