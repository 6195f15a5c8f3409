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

#include <map>
#include <string>
#include <vector>

#include "pego/autograd/tape.hpp"
#include "pego/lora/objective.hpp"
#include "pego/sample.hpp"
#include "pego/vit/model.hpp"

namespace pego::autograd {

struct ParamRef {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool trainable = false;
};

// Every named parameter of the model, in checkpoint order.
std::vector<ParamRef> parameter_refs(const vit::VitModel& model);

// Gradients keyed by parameter name. Holds exactly the trainable set of the
// model it was produced for.
class GradientSet {
public:
    GradientSet() = default;

    void insert(std::string name, Matrix grad);
    // Throws InputError for frozen or unknown names.
    const Matrix& at(const std::string& name) const;
    bool contains(const std::string& name) const { return grads_.count(name) != 0; }
    std::size_t size() const noexcept { return grads_.size(); }
    const std::map<std::string, Matrix>& entries() const noexcept { return grads_; }

private:
    std::map<std::string, Matrix> grads_;
};

struct BackwardOptions {
    // Negative control for gradient checks: flips the subgradient sign of
    // every L1 term.
    bool inject_l1_sign_bug = false;
};

struct BackwardResult {
    lora::LossBreakdown loss;
    GradientSet grads;
};

// Loss and exact gradients of the training objective with respect to the
// adapter factors and the classifier head.
BackwardResult backward(const vit::VitModel& model, const Batch& batch,
                        const lora::LossWeights& weights, const BackwardOptions& options = {});

// Cross-entropy gradients for every parameter of the model (full
// fine-tuning). Used to produce the frozen base.
BackwardResult backward_all_parameters(const vit::VitModel& model, const Batch& batch);

}  // namespace pego::autograd
