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

#include "pego/trainer/adam.hpp"

#include <cmath>

#include "pego/errors.hpp"

namespace pego::trainer {

void adam_step(std::span<const ParamSlot> params, AdamState& state, double lr) {
    for (const auto& p : params) {
        if (!p.value->same_shape(*p.grad)) {
            throw ShapeError("adam_step: gradient shape " + p.grad->shape_string() +
                             " does not match parameter '" + p.name + "' " +
                             p.value->shape_string());
        }
        if (!numerics::all_finite(*p.grad)) {
            throw NumericError("adam_step: non-finite gradient for '" + p.name + "'");
        }
    }
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(kAdamBeta1, t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t);
    for (const auto& p : params) {
        auto mit = state.m.try_emplace(p.name, p.value->rows(), p.value->cols()).first;
        auto vit = state.v.try_emplace(p.name, p.value->rows(), p.value->cols()).first;
        Matrix& m = mit->second;
        Matrix& v = vit->second;
        Matrix& w = *p.value;
        const Matrix& g = *p.grad;
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
            v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
        }
    }
}

void adam_step(vit::VitModel& model, const autograd::GradientSet& grads, AdamState& state,
               double lr) {
    std::vector<ParamSlot> slots;
    vit::for_each_parameter(model, [&](const std::string& name, Matrix& m) {
        if (vit::is_trainable_name(name) && grads.contains(name)) {
            slots.push_back({name, &m, &grads.at(name)});
        }
    });
    adam_step(slots, state, lr);
}

}  // namespace pego::trainer
