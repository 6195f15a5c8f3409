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

#include "pego/autograd/backward.hpp"

#include <cmath>
#include <functional>

#include "pego/errors.hpp"

namespace pego::autograd {

namespace {

class GraphBuilder {
public:
    GraphBuilder(Tape& tape, const vit::VitModel& model,
                 const std::function<bool(const std::string&)>& differentiate)
        : tape_(tape), model_(model) {
        vit::for_each_parameter(model, [&](const std::string& name, const Matrix& m) {
            const bool diff = differentiate(name);
            vars_.emplace(name, diff ? tape_.parameter(m) : tape_.constant(m));
            if (diff) differentiated_.push_back(name);
        });
        patch_w_ = param("patch_embed.w");
        patch_b_ = param("patch_embed.b");
        cls_ = param("cls_token");
        pos_ = param("pos_embed");
        ln_final_ = {param("ln_final.g"), param("ln_final.b")};
        head_ = {param("head.w"), param("head.b")};
        for (std::size_t b = 0; b < model.blocks.size(); ++b) {
            const std::string p = "blocks." + std::to_string(b) + ".";
            BlockVars bv;
            bv.ln1 = {param(p + "ln1.g"), param(p + "ln1.b")};
            bv.ln2 = {param(p + "ln2.g"), param(p + "ln2.b")};
            bv.wq = adapted_vars(p + "attn.wq", model.blocks[b].wq);
            bv.wv = adapted_vars(p + "attn.wv", model.blocks[b].wv);
            bv.wk = {param(p + "attn.wk.w"), param(p + "attn.wk.b")};
            bv.wo = {param(p + "attn.wo.w"), param(p + "attn.wo.b")};
            bv.fc = {param(p + "mlp.fc.w"), param(p + "mlp.fc.b")};
            bv.proj = {param(p + "mlp.proj.w"), param(p + "mlp.proj.b")};
            blocks_.push_back(std::move(bv));
        }
    }

    Var param(const std::string& name) const { return vars_.at(name); }
    const std::vector<std::string>& differentiated() const { return differentiated_; }

    // Logits column (classes x 1) for one image.
    Var logits(const vit::Image& image) {
        Var patches = tape_.constant(vit::extract_patches(model_.config, image));
        Var emb = tape_.add_col_bias(tape_.matmul(patch_w_, patches), patch_b_);
        const Var tokens[] = {cls_, emb};
        Var x = tape_.add(tape_.concat_cols(tokens), pos_);
        for (const auto& bv : blocks_) x = block(bv, x);
        Var feat = tape_.column(layernorm(x, ln_final_), 0);
        return linear(feat, head_);
    }

    // Per-layer preserve and diversify terms for the adapted projections.
    void orthogonality_terms(std::vector<Var>& preserve, std::vector<Var>& diversify) {
        for (const auto& bv : blocks_) {
            layer_terms(bv.wq, preserve, diversify);
            layer_terms(bv.wv, preserve, diversify);
        }
    }

private:
    struct Pair {
        Var first;
        Var second;
    };

    struct AdaptedVars {
        Var base;
        Var bias;
        std::vector<Pair> modules;  // (A, B)
    };

    struct BlockVars {
        Pair ln1, ln2, wk, wo, fc, proj;
        AdaptedVars wq, wv;
    };

    AdaptedVars adapted_vars(const std::string& p, const lora::AdaptedLinear& layer) const {
        AdaptedVars av{param(p + ".base"), param(p + ".bias"), {}};
        for (std::size_t i = 0; i < layer.group.size(); ++i) {
            const std::string lp = p + ".lora." + std::to_string(i) + ".";
            av.modules.push_back({param(lp + "A"), param(lp + "B")});
        }
        return av;
    }

    Var layernorm(Var x, const Pair& ln) {
        return tape_.layernorm_cols(x, ln.first, ln.second, vit::kLayerNormEps);
    }

    Var linear(Var x, const Pair& l) {
        return tape_.add_col_bias(tape_.matmul(l.first, x), l.second);
    }

    Var adapted(Var x, const AdaptedVars& av) {
        Var y = tape_.matmul(av.base, x);
        for (const auto& [a, b] : av.modules) y = tape_.add(y, tape_.matmul(b, tape_.matmul(a, x)));
        return tape_.add_col_bias(y, av.bias);
    }

    Var block(const BlockVars& bv, Var x) {
        const auto& cfg = model_.config;
        Var h = layernorm(x, bv.ln1);
        Var q = adapted(h, bv.wq);
        Var k = linear(h, bv.wk);
        Var v = adapted(h, bv.wv);
        const std::size_t dh = cfg.head_dim();
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        std::vector<Var> heads;
        heads.reserve(cfg.num_heads);
        for (std::size_t head = 0; head < cfg.num_heads; ++head) {
            Var qh = tape_.slice_rows(q, head * dh, dh);
            Var kh = tape_.slice_rows(k, head * dh, dh);
            Var vh = tape_.slice_rows(v, head * dh, dh);
            Var probs = tape_.softmax_rows(tape_.scale(tape_.matmul_tn(qh, kh), scale));
            heads.push_back(tape_.matmul_nt(vh, probs));
        }
        x = tape_.add(x, linear(tape_.concat_rows(heads), bv.wo));
        Var m = tape_.gelu(linear(layernorm(x, bv.ln2), bv.fc));
        return tape_.add(x, linear(m, bv.proj));
    }

    void layer_terms(const AdaptedVars& av, std::vector<Var>& preserve,
                     std::vector<Var>& diversify) {
        std::vector<Var> deltas;
        for (const auto& [a, b] : av.modules) deltas.push_back(tape_.matmul(b, a));
        for (Var d : deltas) preserve.push_back(tape_.l1(tape_.matmul_tn(av.base, d)));
        for (std::size_t i = 0; i < deltas.size(); ++i)
            for (std::size_t j = i + 1; j < deltas.size(); ++j)
                diversify.push_back(tape_.l1(tape_.matmul_tn(deltas[i], deltas[j])));
    }

    Tape& tape_;
    const vit::VitModel& model_;
    std::map<std::string, Var> vars_;
    std::vector<std::string> differentiated_;
    Var patch_w_, patch_b_, cls_, pos_;
    Pair ln_final_, head_;
    std::vector<BlockVars> blocks_;
};

BackwardResult run(const vit::VitModel& model, const Batch& batch,
                   const lora::LossWeights& weights, const BackwardOptions& options,
                   const std::function<bool(const std::string&)>& differentiate) {
    if (batch.empty()) throw InputError("backward: empty batch");
    if (weights.alpha < 0.0) throw ConfigError("backward: alpha must be >= 0");
    Tape tape(Tape::Options{options.inject_l1_sign_bug ? -1.0 : 1.0});
    GraphBuilder g(tape, model, differentiate);

    std::vector<Var> columns;
    std::vector<std::size_t> labels;
    columns.reserve(batch.size());
    labels.reserve(batch.size());
    for (const auto& s : batch) {
        columns.push_back(g.logits(s.image));
        labels.push_back(s.label);
    }
    Var cls = tape.cross_entropy_mean(tape.concat_cols(columns), labels);

    std::vector<Var> preserve, diversify;
    g.orthogonality_terms(preserve, diversify);

    BackwardResult out;
    out.loss.cls = tape.value(cls)[0];
    for (Var v : preserve) out.loss.preserve += tape.value(v)[0];
    for (Var v : diversify) out.loss.diversify += tape.value(v)[0];

    std::vector<Var> terms{cls};
    std::vector<double> coeffs{1.0};
    // Zero-weighted terms stay off the reverse path entirely.
    if (weights.preserve_weight() != 0.0) {
        for (Var v : preserve) {
            terms.push_back(v);
            coeffs.push_back(weights.preserve_weight());
        }
    }
    if (weights.diversify_weight() != 0.0) {
        for (Var v : diversify) {
            terms.push_back(v);
            coeffs.push_back(weights.diversify_weight());
        }
    }
    Var total = tape.weighted_sum(terms, coeffs);
    out.loss.total = out.loss.cls + weights.preserve_weight() * out.loss.preserve +
                     weights.diversify_weight() * out.loss.diversify;
    if (!std::isfinite(tape.value(total)[0])) throw NumericError("backward: non-finite loss");

    tape.backward(total);
    for (const auto& name : g.differentiated()) {
        const Var v = g.param(name);
        Matrix grad = tape.grad(v).empty() ? Matrix(tape.value(v).rows(), tape.value(v).cols())
                                           : tape.grad(v);
        if (!numerics::all_finite(grad)) {
            throw NumericError("backward: non-finite gradient for parameter '" + name + "'");
        }
        out.grads.insert(name, std::move(grad));
    }
    return out;
}

}  // namespace

std::vector<ParamRef> parameter_refs(const vit::VitModel& model) {
    std::vector<ParamRef> refs;
    vit::for_each_parameter(model, [&](const std::string& name, const Matrix& m) {
        refs.push_back({name, m.rows(), m.cols(), vit::is_trainable_name(name)});
    });
    return refs;
}

void GradientSet::insert(std::string name, Matrix grad) {
    grads_.insert_or_assign(std::move(name), std::move(grad));
}

const Matrix& GradientSet::at(const std::string& name) const {
    const auto it = grads_.find(name);
    if (it == grads_.end()) {
        throw InputError("no gradient for parameter '" + name + "'" +
                         (vit::is_trainable_name(name) ? "" : " (frozen parameter)"));
    }
    return it->second;
}

BackwardResult backward(const vit::VitModel& model, const Batch& batch,
                        const lora::LossWeights& weights, const BackwardOptions& options) {
    return run(model, batch, weights, options, vit::is_trainable_name);
}

BackwardResult backward_all_parameters(const vit::VitModel& model, const Batch& batch) {
    return run(model, batch, lora::LossWeights{0.0, false, false}, {},
               [](const std::string&) { return true; });
}

}  // namespace pego::autograd
