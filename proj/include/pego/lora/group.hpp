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
#include "pego/numerics/rng.hpp"

namespace pego::lora {

using numerics::Matrix;

// One low-rank pair: delta = B * A with A (r x k) and B (d x r).
struct LoraModule {
    Matrix A;
    Matrix B;

    std::size_t rank() const noexcept { return A.rows(); }
    Matrix delta() const { return numerics::matmul(B, A); }
};

// N low-rank pairs sharing (d, k, r) attached to one frozen weight.
struct LoraGroup {
    std::vector<LoraModule> modules;

    std::size_t size() const noexcept { return modules.size(); }
    bool empty() const noexcept { return modules.empty(); }
    // Sum of B_i A_i, shape (d, k). Requires a non-empty group.
    Matrix delta() const;
};

// Frozen base weight W (d x k) plus an optional adapter group. An empty group
// means the projection is not adapted.
struct AdaptedLinear {
    Matrix base;
    LoraGroup group;

    std::size_t out_dim() const noexcept { return base.rows(); }
    std::size_t in_dim() const noexcept { return base.cols(); }
    bool adapted() const noexcept { return !group.empty(); }
};

inline constexpr double kLoraInitStd = 0.02;

// A_i ~ N(0, 0.02^2), B_i = 0, so the group starts with a zero delta.
LoraGroup init_group(std::size_t d, std::size_t k, std::size_t r, std::size_t n,
                     numerics::Rng& rng);

// Checks (d, k, r) consistency of every module against the host weight.
void validate(const AdaptedLinear& layer);

// W z + sum_i B_i (A_i z); columns of z_in are token vectors. The factored
// order is kept so B_i A_i is never formed on this path.
Matrix adapted_forward(const AdaptedLinear& layer, const Matrix& z_in);

// sum_i || W^T (B_i A_i) ||_1
double loss_preserve(const AdaptedLinear& layer);
// sum_{i<j} || (B_i A_i)^T (B_j A_j) ||_1
double loss_diversify(const LoraGroup& group);
double loss_orthogonal(const AdaptedLinear& layer);

// |(W z)^T (dW z) - z^T (W^T dW) z| for dW = sum_i B_i A_i. Zero up to
// rounding; exposed as a diagnostic for the feature-level reading of the
// preserve loss.
double feature_orthogonality_gap(const AdaptedLinear& layer, std::span<const double> z_in);

// W + sum_i B_i A_i, with the group removed. Bitwise W when every B_i is zero.
AdaptedLinear merge(const AdaptedLinear& layer);

}  // namespace pego::lora
