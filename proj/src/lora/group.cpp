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

#include "pego/lora/group.hpp"

#include <cmath>
#include <string>

#include "pego/errors.hpp"

namespace pego::lora {

using numerics::matmul;
using numerics::matmul_tn;

Matrix LoraGroup::delta() const {
    if (modules.empty()) throw ShapeError("LoraGroup::delta: empty group");
    Matrix sum = modules.front().delta();
    for (std::size_t i = 1; i < modules.size(); ++i) sum += modules[i].delta();
    return sum;
}

LoraGroup init_group(std::size_t d, std::size_t k, std::size_t r, std::size_t n,
                     numerics::Rng& rng) {
    if (n == 0) throw ConfigError("init_group: group size must be >= 1");
    if (r == 0 || r > std::min(d, k)) {
        throw ConfigError("init_group: rank " + std::to_string(r) + " invalid for weight (" +
                          std::to_string(d) + ", " + std::to_string(k) + ")");
    }
    LoraGroup g;
    g.modules.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        g.modules.push_back({rng.gaussian(r, k, kLoraInitStd), Matrix(d, r)});
    }
    return g;
}

void validate(const AdaptedLinear& layer) {
    const std::size_t d = layer.out_dim();
    const std::size_t k = layer.in_dim();
    if (layer.group.empty()) return;
    const std::size_t r = layer.group.modules.front().rank();
    if (r == 0 || r > std::min(d, k)) {
        throw ShapeError("adapter rank " + std::to_string(r) + " invalid for weight " +
                         layer.base.shape_string());
    }
    for (const auto& m : layer.group.modules) {
        if (m.A.rows() != r || m.A.cols() != k || m.B.rows() != d || m.B.cols() != r) {
            throw ShapeError("adapter shapes A " + m.A.shape_string() + ", B " +
                             m.B.shape_string() + " inconsistent with weight " +
                             layer.base.shape_string() + " at rank " + std::to_string(r));
        }
    }
}

Matrix adapted_forward(const AdaptedLinear& layer, const Matrix& z_in) {
    if (z_in.rows() != layer.in_dim()) {
        throw ShapeError("adapted_forward: input " + z_in.shape_string() +
                         " does not match weight " + layer.base.shape_string());
    }
    Matrix out = matmul(layer.base, z_in);
    for (const auto& m : layer.group.modules) out += matmul(m.B, matmul(m.A, z_in));
    return out;
}

double loss_preserve(const AdaptedLinear& layer) {
    double total = 0.0;
    for (const auto& m : layer.group.modules) {
        total += numerics::l1_entrywise(matmul_tn(layer.base, m.delta()));
    }
    return total;
}

double loss_diversify(const LoraGroup& group) {
    std::vector<Matrix> deltas;
    deltas.reserve(group.size());
    for (const auto& m : group.modules) deltas.push_back(m.delta());
    double total = 0.0;
    for (std::size_t i = 0; i < deltas.size(); ++i)
        for (std::size_t j = i + 1; j < deltas.size(); ++j)
            total += numerics::l1_entrywise(matmul_tn(deltas[i], deltas[j]));
    return total;
}

double loss_orthogonal(const AdaptedLinear& layer) {
    return loss_preserve(layer) + loss_diversify(layer.group);
}

double feature_orthogonality_gap(const AdaptedLinear& layer, std::span<const double> z_in) {
    const Matrix z = Matrix::column(z_in);
    if (z.rows() != layer.in_dim()) {
        throw ShapeError("feature_orthogonality_gap: input length " + std::to_string(z.rows()) +
                         " does not match weight " + layer.base.shape_string());
    }
    const Matrix delta = layer.group.empty() ? Matrix(layer.out_dim(), layer.in_dim())
                                             : layer.group.delta();
    const Matrix z_init = matmul(layer.base, z);
    const Matrix z_new = matmul(delta, z);
    const double lhs = numerics::dot(z_init.values(), z_new.values());
    const Matrix cross = matmul_tn(layer.base, delta);
    const double rhs = numerics::dot(z.values(), matmul(cross, z).values());
    return std::fabs(lhs - rhs);
}

AdaptedLinear merge(const AdaptedLinear& layer) {
    AdaptedLinear out{layer.base, {}};
    for (const auto& m : layer.group.modules) out.base += m.delta();
    return out;
}

}  // namespace pego::lora
