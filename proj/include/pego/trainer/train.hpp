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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pego/lora/objective.hpp"
#include "pego/trainer/dataset.hpp"
#include "pego/vit/model.hpp"

namespace pego::trainer {

struct TrainConfig {
    double alpha = lora::kDefaultAlpha;
    std::size_t rank = 4;
    std::size_t group_n = 4;
    double lr = 5e-4;
    std::size_t iterations = 500;
    std::size_t batch_per_domain = 32;
    std::uint64_t seed = 0;
    double val_fraction = 0.2;
    vit::VitConfig vit;
    // Validation cadence for training-domain model selection.
    std::size_t eval_every = 50;
    bool use_preserve = true;
    bool use_diversify = true;

    static constexpr std::size_t kLongIterations = 5000;
    static std::vector<std::size_t> group_n_search_space() { return {2, 4, 6}; }

    lora::LossWeights loss_weights() const { return {alpha, use_preserve, use_diversify}; }
    void validate() const;
};

// Desk-scale experiment: 4 domains x 4 classes x 100 per class, 16x16 images,
// d=32, 2 blocks, 4 heads, patch 4, 500 iterations, 8 images per domain.
TrainConfig canonical_config();
DatasetSpec canonical_dataset_spec();

// Full fine-tuning of a fresh model on the synthetic pre-training set. The
// result plays the role of the frozen pre-trained backbone.
struct PretrainConfig {
    std::size_t samples = 2048;
    std::size_t iterations = 3000;
    std::size_t batch = 32;
    double lr = 2e-3;
    std::uint64_t seed = 20240;
};

vit::VitModel pretrain_base(const vit::VitConfig& cfg, const PretrainConfig& pcfg);

// Records every sample that reaches a gradient step or a model-selection
// decision and throws ProtocolError if it belongs to the held-out domain.
class ProtocolAudit {
public:
    explicit ProtocolAudit(std::optional<std::size_t> held_out = std::nullopt)
        : held_out_(held_out) {}

    void check(const Sample& s, const char* stage);
    void check(const std::vector<Sample>& samples, const char* stage);
    void note_frozen_check() noexcept { ++frozen_checks_; }

    std::optional<std::size_t> held_out() const noexcept { return held_out_; }
    std::size_t samples_checked() const noexcept { return checked_; }
    std::size_t frozen_checks() const noexcept { return frozen_checks_; }

private:
    std::optional<std::size_t> held_out_;
    std::size_t checked_ = 0;
    std::size_t frozen_checks_ = 0;
};

struct HistoryRow {
    std::size_t iter = 0;
    double loss_cls = 0.0;
    double loss_preserve = 0.0;
    double loss_diversify = 0.0;
    std::optional<double> val_acc;

    double loss_or() const noexcept { return loss_preserve + loss_diversify; }
};

struct TrainResult {
    vit::VitModel adapted;  // best-validation snapshot, adapters still attached
    vit::VitModel merged;   // adapters folded into the base weights
    std::vector<HistoryRow> history;
    std::size_t selected_iter = 0;
    double best_val_acc = 0.0;
};

double accuracy(const vit::VitModel& model, const std::vector<Sample>& samples);
std::vector<Sample> flatten(const DomainDataset& dataset);

// Attaches fresh adapter groups to wq/wv of every block and a fresh head,
// then runs cfg.iterations Adam steps on the training objective. Validation
// accuracy is measured every cfg.eval_every steps (and at the last step);
// the best snapshot is kept and merged. Frozen parameters are compared
// bitwise against `base` at the end.
TrainResult train(const vit::VitModel& base, const DomainDataset& train_split,
                  const DomainDataset& val_split, const TrainConfig& cfg,
                  ProtocolAudit* audit = nullptr);

// Every non-trainable parameter of `a` equals the one in `b` bitwise.
bool frozen_parameters_equal(const vit::VitModel& a, const vit::VitModel& b);

}  // namespace pego::trainer
