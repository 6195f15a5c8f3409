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

#include "pego/lora/objective.hpp"

#include <algorithm>
#include <cmath>

#include "pego/errors.hpp"

namespace pego::lora {

std::pair<double, double> loss_or_terms(const vit::VitModel& model) {
    double preserve = 0.0;
    double diversify = 0.0;
    for (const auto& blk : model.blocks) {
        for (const AdaptedLinear* layer : {&blk.wq, &blk.wv}) {
            preserve += loss_preserve(*layer);
            diversify += loss_diversify(layer->group);
        }
    }
    return {preserve, diversify};
}

double loss_or(const vit::VitModel& model) {
    double total = 0.0;
    for (const auto& blk : model.blocks) total += loss_orthogonal(blk.wq) + loss_orthogonal(blk.wv);
    return total;
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size()) {
        throw InputError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                         std::to_string(logits.size()) + " classes");
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    return std::log(sum) + mx - logits[label];
}

LossBreakdown final_loss_terms(const vit::VitModel& model, const Batch& batch,
                               const LossWeights& weights) {
    if (batch.empty()) throw InputError("final_loss: empty batch");
    if (weights.alpha < 0.0) throw ConfigError("final_loss: alpha must be >= 0");
    LossBreakdown out;
    for (const auto& s : batch) out.cls += cross_entropy(vit::forward_logits(model, s.image), s.label);
    out.cls /= static_cast<double>(batch.size());
    std::tie(out.preserve, out.diversify) = loss_or_terms(model);
    out.total = out.cls + weights.preserve_weight() * out.preserve +
                weights.diversify_weight() * out.diversify;
    return out;
}

double final_loss(const vit::VitModel& model, const Batch& batch, const LossWeights& weights) {
    return final_loss_terms(model, batch, weights).total;
}

double final_loss(const vit::VitModel& model, const Batch& batch, double alpha) {
    return final_loss(model, batch, LossWeights{alpha, true, true});
}

vit::VitModel merge_all(vit::VitModel model) {
    for (auto& blk : model.blocks) {
        blk.wq = merge(blk.wq);
        blk.wv = merge(blk.wv);
    }
    return model;
}

}  // namespace pego::lora
