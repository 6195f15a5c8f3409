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

#include "pego/trainer/train.hpp"

#include <cmath>

#include "pego/autograd/backward.hpp"
#include "pego/errors.hpp"
#include "pego/trainer/adam.hpp"

namespace pego::trainer {

void TrainConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
    if (rank == 0) throw ConfigError("rank must be >= 1");
    if (group_n == 0) throw ConfigError("group_n must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be >= 0");
    if (batch_per_domain == 0) throw ConfigError("batch_per_domain must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ConfigError("val_fraction must lie in (0, 1)");
    }
    if (eval_every == 0) throw ConfigError("eval_every must be >= 1");
    vit.validate();
    if (rank > vit.embed_dim) {
        throw ConfigError("rank " + std::to_string(rank) + " exceeds embed_dim " +
                          std::to_string(vit.embed_dim));
    }
}

TrainConfig canonical_config() {
    TrainConfig cfg;
    cfg.vit = vit::VitConfig{16, 4, 1, 32, 2, 4, 2.0, 4};
    cfg.iterations = 500;
    cfg.batch_per_domain = 8;
    return cfg;
}

DatasetSpec canonical_dataset_spec() { return DatasetSpec{4, 4, 100, 16}; }

vit::VitModel pretrain_base(const vit::VitConfig& cfg, const PretrainConfig& pcfg) {
    vit::VitConfig pre = cfg;
    pre.num_classes = kShapeFamilies;
    pre.validate();
    if (pre.channels != 1) throw ConfigError("pretrain_base: synthetic data is single-channel");
    numerics::Rng init_rng = numerics::Rng(pcfg.seed).fork(1);
    numerics::Rng batch_rng = numerics::Rng(pcfg.seed).fork(2);
    vit::VitModel model = vit::init_vit(pre, init_rng);
    const DomainDataset data = generate_pretraining_set(pcfg.samples, pre.image_size, pcfg.seed);
    const std::vector<const Domain*> domains{&data.domains.front()};
    AdamState state;
    for (std::size_t it = 0; it < pcfg.iterations; ++it) {
        const Batch batch = make_batch(domains, pcfg.batch, batch_rng);
        const auto res = autograd::backward_all_parameters(model, batch);
        std::vector<ParamSlot> slots;
        vit::for_each_parameter(model, [&](const std::string& name, Matrix& m) {
            slots.push_back({name, &m, &res.grads.at(name)});
        });
        adam_step(slots, state, pcfg.lr);
    }
    return model;
}

void ProtocolAudit::check(const Sample& s, const char* stage) {
    ++checked_;
    if (held_out_ && s.domain == *held_out_) {
        throw ProtocolError(std::string("held-out domain sample ") + std::to_string(s.id) +
                            " reached " + stage);
    }
}

void ProtocolAudit::check(const std::vector<Sample>& samples, const char* stage) {
    for (const auto& s : samples) check(s, stage);
}

double accuracy(const vit::VitModel& model, const std::vector<Sample>& samples) {
    if (samples.empty()) throw InputError("accuracy: no samples");
    std::size_t correct = 0;
    for (const auto& s : samples) correct += vit::predict(model, s.image) == s.label ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

std::vector<Sample> flatten(const DomainDataset& dataset) {
    std::vector<Sample> out;
    out.reserve(dataset.size());
    for (const auto& d : dataset.domains) out.insert(out.end(), d.samples.begin(), d.samples.end());
    return out;
}

bool frozen_parameters_equal(const vit::VitModel& a, const vit::VitModel& b) {
    std::vector<std::pair<std::string, const Matrix*>> fa, fb;
    vit::for_each_parameter(a, [&](const std::string& n, const Matrix& m) {
        if (!vit::is_trainable_name(n)) fa.emplace_back(n, &m);
    });
    vit::for_each_parameter(b, [&](const std::string& n, const Matrix& m) {
        if (!vit::is_trainable_name(n)) fb.emplace_back(n, &m);
    });
    if (fa.size() != fb.size()) return false;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        if (fa[i].first != fb[i].first || !fa[i].second->bitwise_equal(*fb[i].second)) return false;
    }
    return true;
}

TrainResult train(const vit::VitModel& base, const DomainDataset& train_split,
                  const DomainDataset& val_split, const TrainConfig& cfg, ProtocolAudit* audit) {
    cfg.validate();
    if (base.has_adapters()) throw ConfigError("train: base model already carries adapters");
    if (train_split.domains.empty()) throw InputError("train: no source domains");
    const std::vector<Sample> val = flatten(val_split);
    if (val.empty()) throw InputError("train: empty validation split");
    if (audit != nullptr) audit->check(val, "validation");

    numerics::Rng init_rng = numerics::Rng(cfg.seed).fork(1);
    numerics::Rng batch_rng = numerics::Rng(cfg.seed).fork(2);

    vit::VitModel model = base;
    vit::reset_head(model, train_split.num_classes, init_rng);
    vit::inject_adapters(model, cfg.rank, cfg.group_n, init_rng);

    std::vector<const Domain*> sources;
    for (const auto& d : train_split.domains) sources.push_back(&d);

    const lora::LossWeights weights = cfg.loss_weights();
    AdamState state;
    TrainResult result;
    result.history.reserve(cfg.iterations);
    result.adapted = model;
    bool have_snapshot = false;

    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        const Batch batch = make_batch(sources, cfg.batch_per_domain, batch_rng);
        if (audit != nullptr) audit->check(batch, "gradient step");
        autograd::BackwardResult res;
        try {
            res = autograd::backward(model, batch, weights);
            adam_step(model, res.grads, state, cfg.lr);
        } catch (const NumericError& e) {
            throw NumericError("iteration " + std::to_string(it) + ": " + e.what());
        }
        HistoryRow row{it, res.loss.cls, res.loss.preserve, res.loss.diversify, std::nullopt};
        if (it % cfg.eval_every == 0 || it == cfg.iterations) {
            const double acc = accuracy(model, val);
            row.val_acc = acc;
            if (!have_snapshot || acc > result.best_val_acc) {
                result.best_val_acc = acc;
                result.selected_iter = it;
                result.adapted = model;
                have_snapshot = true;
            }
        }
        result.history.push_back(row);
    }
    if (!have_snapshot) result.best_val_acc = accuracy(model, val);

    if (!frozen_parameters_equal(result.adapted, base) || !frozen_parameters_equal(model, base)) {
        throw ProtocolError("train: frozen parameters changed during training");
    }
    if (audit != nullptr) audit->note_frozen_check();
    result.merged = lora::merge_all(result.adapted);
    return result;
}

}  // namespace pego::trainer
