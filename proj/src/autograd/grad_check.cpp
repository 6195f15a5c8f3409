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

#include "pego/autograd/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "pego/errors.hpp"

namespace pego::autograd {

namespace {

Matrix& find_parameter(vit::VitModel& model, const std::string& name) {
    Matrix* found = nullptr;
    vit::for_each_parameter(model, [&](const std::string& n, Matrix& m) {
        if (n == name) found = &m;
    });
    if (found == nullptr) throw InputError("unknown parameter '" + name + "'");
    return *found;
}

double parameter_value(const vit::VitModel& model, const std::string& name, std::size_t entry) {
    double value = 0.0;
    vit::for_each_parameter(model, [&](const std::string& n, const Matrix& m) {
        if (n == name) value = m[entry];
    });
    return value;
}

struct AdapterLocation {
    std::size_t block = 0;
    bool value_proj = false;
    std::size_t module = 0;
};

std::optional<AdapterLocation> locate_adapter(const std::string& name) {
    // blocks.{b}.attn.{wq|wv}.lora.{i}.{A|B}
    unsigned b = 0, i = 0;
    char proj[3] = {};
    char which = 0;
    if (std::sscanf(name.c_str(), "blocks.%u.attn.%2c.lora.%u.%c", &b, proj, &i, &which) != 4) {
        return std::nullopt;
    }
    return AdapterLocation{b, proj[1] == 'v', i};
}

// L1 arguments of the layer that depend on adapter module `i`.
std::vector<Matrix> kink_arguments(const lora::AdaptedLinear& layer, std::size_t i,
                                   const lora::LossWeights& w) {
    std::vector<Matrix> out;
    const Matrix di = layer.group.modules[i].delta();
    if (w.preserve_weight() != 0.0) out.push_back(numerics::matmul_tn(layer.base, di));
    if (w.diversify_weight() != 0.0) {
        for (std::size_t j = 0; j < layer.group.size(); ++j) {
            if (j == i) continue;
            const Matrix dj = layer.group.modules[j].delta();
            out.push_back(j > i ? numerics::matmul_tn(di, dj) : numerics::matmul_tn(dj, di));
        }
    }
    return out;
}

bool near_kink(const vit::VitModel& model, const lora::LossWeights& w, const std::string& name,
               std::size_t entry, double h) {
    const auto loc = locate_adapter(name);
    if (!loc) return false;
    vit::VitModel probe = model;
    Matrix& p = find_parameter(probe, name);
    const double p0 = p[entry];
    auto args_at = [&](double value) {
        p[entry] = value;
        const auto& blk = probe.blocks[loc->block];
        return kink_arguments(loc->value_proj ? blk.wv : blk.wq, loc->module, w);
    };
    const auto mid = args_at(p0);
    const auto lo = args_at(p0 - h);
    const auto hi = args_at(p0 + h);
    for (std::size_t a = 0; a < mid.size(); ++a)
        for (std::size_t e = 0; e < mid[a].size(); ++e) {
            if (std::fabs(mid[a][e]) < kKinkTolerance) return true;
            if ((lo[a][e] > 0.0) != (hi[a][e] > 0.0)) return true;
        }
    return false;
}

}  // namespace

double central_difference(const std::function<double(double)>& f, double x, double h) {
    if (!(h > 0.0)) throw InputError("central_difference: step must be positive");
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

double finite_diff(const vit::VitModel& model, const Batch& batch,
                   const lora::LossWeights& weights, const std::string& param, std::size_t entry,
                   double h) {
    vit::VitModel probe = model;
    Matrix& p = find_parameter(probe, param);
    if (entry >= p.size()) {
        throw InputError("finite_diff: entry " + std::to_string(entry) + " out of range for '" +
                         param + "'");
    }
    return central_difference(
        [&](double value) {
            p[entry] = value;
            return lora::final_loss(probe, batch, weights);
        },
        p[entry], h);
}

double relative_error(double analytic, double numeric) {
    return std::fabs(analytic - numeric) /
           std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
}

double default_step(double p) { return 1e-5 * std::max(1.0, std::fabs(p)); }

GradCheckReport grad_check(const vit::VitModel& model, const Batch& batch,
                           const lora::LossWeights& weights, std::size_t samples,
                           numerics::Rng& rng, const BackwardOptions& options) {
    if (samples == 0) throw InputError("grad_check: samples must be >= 1");
    const BackwardResult res = backward(model, batch, weights, options);

    std::vector<ParamRef> trainable;
    for (auto& ref : parameter_refs(model))
        if (ref.trainable) trainable.push_back(std::move(ref));
    if (trainable.empty()) throw InputError("grad_check: model has no trainable parameters");

    GradCheckReport report;
    for (std::size_t s = 0; s < samples; ++s) {
        const ParamRef& ref = trainable[rng.index(trainable.size())];
        Probe probe{ref.name, static_cast<std::size_t>(rng.index(ref.rows * ref.cols))};
        ++report.attempted;
        const double value = parameter_value(model, ref.name, probe.entry);
        const double h = default_step(value);
        if (near_kink(model, weights, ref.name, probe.entry, h)) {
            probe.skipped = true;
            report.probes.push_back(std::move(probe));
            continue;
        }
        probe.analytic = res.grads.at(ref.name)[probe.entry];
        probe.numeric = finite_diff(model, batch, weights, ref.name, probe.entry, h);
        probe.rel_error = relative_error(probe.analytic, probe.numeric);
        report.max_rel_error = std::max(report.max_rel_error, probe.rel_error);
        ++report.accepted;
        report.probes.push_back(std::move(probe));
    }
    if (2 * report.accepted < samples) {
        throw InconclusiveCheckError("grad_check: only " + std::to_string(report.accepted) +
                                     " of " + std::to_string(samples) + " probes usable");
    }
    return report;
}

GradCheckProblem make_gradcheck_problem(std::uint64_t seed) {
    vit::VitConfig cfg;
    cfg.image_size = 8;
    cfg.patch_size = 4;
    cfg.channels = 1;
    cfg.embed_dim = 8;
    cfg.num_blocks = 1;
    cfg.num_heads = 2;
    cfg.mlp_ratio = 2.0;
    cfg.num_classes = 2;

    numerics::Rng rng(seed);
    GradCheckProblem p;
    p.model = vit::init_vit(cfg, rng, 0.3);
    vit::inject_adapters(p.model, 2, 2, rng);
    for (auto& blk : p.model.blocks) {
        for (auto* layer : {&blk.wq, &blk.wv}) {
            for (auto& m : layer->group.modules) {
                m.A = rng.gaussian(m.A.rows(), m.A.cols(), 0.5);
                m.B = rng.gaussian(m.B.rows(), m.B.cols(), 0.5);
            }
        }
    }
    p.model.head.w = rng.gaussian(cfg.num_classes, cfg.embed_dim, 0.5);
    p.model.head.b = rng.gaussian(cfg.num_classes, 1, 0.1);
    for (std::size_t i = 0; i < 4; ++i) {
        p.batch.push_back({rng.gaussian(cfg.image_size, cfg.image_size, 1.0), i % 2, 0, i});
    }
    return p;
}

}  // namespace pego::autograd
