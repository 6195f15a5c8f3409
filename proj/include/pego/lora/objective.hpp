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

#include <span>

#include "pego/sample.hpp"
#include "pego/vit/model.hpp"

namespace pego::lora {

inline constexpr double kDefaultAlpha = 1e-3;

// Which orthogonality terms enter the objective; the ablation grid toggles
// them independently.
struct LossWeights {
    double alpha = kDefaultAlpha;
    bool preserve = true;
    bool diversify = true;

    double preserve_weight() const noexcept { return preserve ? alpha : 0.0; }
    double diversify_weight() const noexcept { return diversify ? alpha : 0.0; }
};

struct LossBreakdown {
    double cls = 0.0;        // mean cross-entropy
    double preserve = 0.0;   // sum of preserve terms over adapted layers
    double diversify = 0.0;  // sum of diversify terms over adapted layers
    double total = 0.0;      // cls + weighted orthogonality terms

    double orthogonal() const noexcept { return preserve + diversify; }
};

// Sum over blocks of the orthogonality loss on wq and wv. Layers without a
// group contribute zero.
double loss_or(const vit::VitModel& model);
// Preserve and diversify sums separately, in the same order as loss_or.
std::pair<double, double> loss_or_terms(const vit::VitModel& model);

// Mean cross-entropy of the logits against the labels.
double cross_entropy(std::span<const double> logits, std::size_t label);

LossBreakdown final_loss_terms(const vit::VitModel& model, const Batch& batch,
                               const LossWeights& weights);
double final_loss(const vit::VitModel& model, const Batch& batch, double alpha);
double final_loss(const vit::VitModel& model, const Batch& batch, const LossWeights& weights);

// Folds every adapter group into its base weight. The result carries no
// adapters and computes the same function up to rounding.
vit::VitModel merge_all(vit::VitModel model);

}  // namespace pego::lora
