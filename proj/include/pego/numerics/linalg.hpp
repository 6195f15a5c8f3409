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

#pragma once

#include <cstddef>
#include <vector>

#include "pego/numerics/matrix.hpp"

namespace pego::numerics {

// Thin SVD m = U diag(s) V^T with p = min(rows, cols) components.
struct SvdResult {
    Matrix left_vectors;                 // rows x p, columns are left singular vectors
    std::vector<double> singular_values; // descending, nonnegative
    Matrix right_vectors;                // cols x p, columns are right singular vectors
};

inline constexpr int kSvdMaxSweeps = 10000;

// One-sided (Hestenes) Jacobi SVD. Left vectors belonging to numerically zero
// singular values are completed to an orthonormal set by Gram-Schmidt over
// the standard basis. Each left vector is sign-normalized so that its
// largest-magnitude entry is positive (the right vector flips with it).
SvdResult svd(const Matrix& m);

// sigma_i^2 / sum_j sigma_j^2 for the top k components. Singular values below
// 1e-10 * sigma_1 count as zero.
std::vector<double> explained_variance_ratio(const SvdResult& s, std::size_t k);

// Count of singular values strictly above rel_threshold * sigma_1.
std::size_t numerical_rank(const std::vector<double>& singular_values, double rel_threshold);

}  // namespace pego::numerics
