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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pego/autograd/backward.hpp"
#include "pego/vit/model.hpp"

namespace pego::trainer {

using numerics::Matrix;

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct AdamState {
    std::map<std::string, Matrix> m;
    std::map<std::string, Matrix> v;
    std::size_t t = 0;
};

struct ParamSlot {
    std::string name;
    Matrix* value;
    const Matrix* grad;
};

// Bias-corrected Adam over an explicit parameter list. Moments are created
// lazily per name. Throws NumericError on a non-finite gradient before any
// parameter is touched.
void adam_step(std::span<const ParamSlot> params, AdamState& state, double lr);

// Updates exactly the trainable parameters of the model that appear in
// `grads`; frozen parameters are never written.
void adam_step(vit::VitModel& model, const autograd::GradientSet& grads, AdamState& state,
               double lr);

}  // namespace pego::trainer
