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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pego/autograd/backward.hpp"
#include "pego/numerics/rng.hpp"

namespace pego::autograd {

// Central difference (f(x + h) - f(x - h)) / 2h.
double central_difference(const std::function<double(double)>& f, double x, double h);

// Central difference of the training objective along one entry of one
// parameter, all other parameters fixed. Uses the forward-only model path.
double finite_diff(const vit::VitModel& model, const Batch& batch,
                   const lora::LossWeights& weights, const std::string& param, std::size_t entry,
                   double h);

// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double analytic, double numeric);

// Default oracle step for a parameter value p.
double default_step(double p);

struct Probe {
    std::string param;
    std::size_t entry = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
    bool skipped = false;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t attempted = 0;
    std::size_t accepted = 0;
    std::vector<Probe> probes;
};

inline constexpr double kKinkTolerance = 1e-6;

// Compares analytic gradients against central differences at `samples`
// random (parameter, entry) probes. A probe is skipped when an L1 argument
// that depends on the probed entry sits within 1e-6 of zero or changes sign
// inside the difference stencil. Throws InconclusiveCheckError when fewer
// than half of the probes are usable.
GradCheckReport grad_check(const vit::VitModel& model, const Batch& batch,
                           const lora::LossWeights& weights, std::size_t samples,
                           numerics::Rng& rng, const BackwardOptions& options = {});

inline constexpr double kGradTolNoReg = 1e-6;
inline constexpr double kGradTolReg = 1e-5;

// The fixed small problem used for gradient verification: d=8, one block,
// two heads, N=2 adapters of rank 2, two classes, 8x8 images in 4x4 patches.
// Adapter factors and head are randomized so every term has a nonzero
// gradient.
struct GradCheckProblem {
    vit::VitModel model;
    Batch batch;
};

GradCheckProblem make_gradcheck_problem(std::uint64_t seed);

}  // namespace pego::autograd
