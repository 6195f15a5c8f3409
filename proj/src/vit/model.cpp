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

#include "pego/vit/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pego/errors.hpp"

namespace pego::vit {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
}  // namespace

using numerics::matmul;

std::size_t VitConfig::mlp_dim() const noexcept {
    return static_cast<std::size_t>(std::lround(static_cast<double>(embed_dim) * mlp_ratio));
}

void VitConfig::validate() const {
    if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0) {
        throw ConfigError("vit config: image_size " + std::to_string(image_size) +
                          " must be a positive multiple of patch_size " +
                          std::to_string(patch_size));
    }
    if (channels != 1 && channels != 3) throw ConfigError("vit config: channels must be 1 or 3");
    if (num_heads == 0 || embed_dim == 0 || embed_dim % num_heads != 0) {
        throw ConfigError("vit config: embed_dim " + std::to_string(embed_dim) +
                          " must be divisible by num_heads " + std::to_string(num_heads));
    }
    if (num_blocks < 1) throw ConfigError("vit config: num_blocks must be >= 1");
    if (num_classes < 2) throw ConfigError("vit config: num_classes must be >= 2");
    if (!(mlp_ratio > 0.0) || mlp_dim() == 0) throw ConfigError("vit config: mlp_ratio too small");
}

bool VitModel::has_adapters() const noexcept {
    return std::any_of(blocks.begin(), blocks.end(),
                       [](const Block& b) { return b.wq.adapted() || b.wv.adapted(); });
}

std::pair<std::size_t, std::size_t> VitModel::adapter_shape() const noexcept {
    for (const auto& b : blocks) {
        if (b.wq.adapted()) return {b.wq.group.modules.front().rank(), b.wq.group.size()};
    }
    return {0, 0};
}

namespace {

Linear make_linear(std::size_t out, std::size_t in, numerics::Rng& rng, double std) {
    return {rng.gaussian(out, in, std), Matrix(out, 1)};
}

LayerNorm make_layernorm(std::size_t d) { return {Matrix(d, 1, 1.0), Matrix(d, 1)}; }

void add_bias(Matrix& x, const Matrix& bias) {
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (double& v : x.row(r)) v += bias[r];
}

Matrix layer_norm(const Matrix& x, const LayerNorm& ln) {
    const std::size_t d = x.rows();
    Matrix out(d, x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < d; ++r) mean += x(r, c);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t r = 0; r < d; ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (std::size_t r = 0; r < d; ++r)
            out(r, c) = (x(r, c) - mean) * inv * ln.gamma[r] + ln.beta[r];
    }
    return out;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

Matrix affine(const Linear& l, const Matrix& x) {
    Matrix y = matmul(l.w, x);
    add_bias(y, l.b);
    return y;
}

Matrix projection(const lora::AdaptedLinear& w, const Matrix& bias, const Matrix& x) {
    Matrix y = lora::adapted_forward(w, x);
    add_bias(y, bias);
    return y;
}

// Softmax over keys for one head; rows index queries.
Matrix head_attention(const Matrix& q, const Matrix& k, std::size_t offset, std::size_t dh) {
    const std::size_t t = q.cols();
    Matrix scores(t, t);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < t; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < dh; ++r) s += q(offset + r, i) * k(offset + r, j);
            scores(i, j) = s * scale;
        }
    return numerics::softmax_rows(scores);
}

Matrix embed(const VitModel& model, const Image& image) {
    const auto& cfg = model.config;
    const Matrix patches = extract_patches(cfg, image);
    const Matrix emb = affine(model.patch_embed, patches);
    Matrix x(cfg.embed_dim, cfg.num_tokens());
    for (std::size_t r = 0; r < cfg.embed_dim; ++r) {
        x(r, 0) = model.cls_token[r];
        for (std::size_t c = 0; c < emb.cols(); ++c) x(r, c + 1) = emb(r, c);
    }
    x += model.pos_embed;
    return x;
}

Matrix attention(const VitModel& model, const Block& blk, const Matrix& h) {
    const auto& cfg = model.config;
    const Matrix q = projection(blk.wq, blk.bq, h);
    const Matrix k = affine(blk.wk, h);
    const Matrix v = projection(blk.wv, blk.bv, h);
    const std::size_t dh = cfg.head_dim();
    const std::size_t t = h.cols();
    Matrix heads(cfg.embed_dim, t);
    for (std::size_t head = 0; head < cfg.num_heads; ++head) {
        const std::size_t off = head * dh;
        const Matrix p = head_attention(q, k, off, dh);
        for (std::size_t r = 0; r < dh; ++r)
            for (std::size_t i = 0; i < t; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < t; ++j) s += p(i, j) * v(off + r, j);
                heads(off + r, i) = s;
            }
    }
    return affine(blk.wo, heads);
}

Matrix run_block(const VitModel& model, const Block& blk, Matrix x) {
    x += attention(model, blk, layer_norm(x, blk.ln1));
    Matrix m = affine(blk.fc, layer_norm(x, blk.ln2));
    for (double& v : m.values()) v = gelu(v);
    x += affine(blk.proj, m);
    return x;
}

void check_image(const VitConfig& cfg, const Image& image) {
    if (image.rows() != cfg.channels * cfg.image_size || image.cols() != cfg.image_size) {
        throw ShapeError("image shape " + image.shape_string() + " does not match configured (" +
                         std::to_string(cfg.channels * cfg.image_size) + ", " +
                         std::to_string(cfg.image_size) + ")");
    }
}

}  // namespace

VitModel init_vit(const VitConfig& cfg, numerics::Rng& rng, double init_std) {
    cfg.validate();
    const std::size_t d = cfg.embed_dim;
    VitModel m;
    m.config = cfg;
    m.patch_embed = make_linear(d, cfg.patch_dim(), rng, init_std);
    m.cls_token = rng.gaussian(d, 1, init_std);
    m.pos_embed = rng.gaussian(d, cfg.num_tokens(), init_std);
    m.blocks.reserve(cfg.num_blocks);
    for (std::size_t b = 0; b < cfg.num_blocks; ++b) {
        Block blk;
        blk.ln1 = make_layernorm(d);
        blk.wq.base = rng.gaussian(d, d, init_std);
        blk.bq = Matrix(d, 1);
        blk.wk = make_linear(d, d, rng, init_std);
        blk.wv.base = rng.gaussian(d, d, init_std);
        blk.bv = Matrix(d, 1);
        blk.wo = make_linear(d, d, rng, init_std);
        blk.ln2 = make_layernorm(d);
        blk.fc = make_linear(cfg.mlp_dim(), d, rng, init_std);
        blk.proj = make_linear(d, cfg.mlp_dim(), rng, init_std);
        m.blocks.push_back(std::move(blk));
    }
    m.ln_final = make_layernorm(d);
    m.head = make_linear(cfg.num_classes, d, rng, init_std);
    return m;
}

void inject_adapters(VitModel& model, std::size_t rank, std::size_t n, numerics::Rng& rng) {
    for (auto& blk : model.blocks) {
        blk.wq.group = lora::init_group(blk.wq.out_dim(), blk.wq.in_dim(), rank, n, rng);
        blk.wv.group = lora::init_group(blk.wv.out_dim(), blk.wv.in_dim(), rank, n, rng);
    }
}

void strip_adapters(VitModel& model) {
    for (auto& blk : model.blocks) {
        blk.wq.group = {};
        blk.wv.group = {};
    }
}

void reset_head(VitModel& model, std::size_t num_classes, numerics::Rng& rng, double init_std) {
    if (num_classes < 2) throw ConfigError("reset_head: num_classes must be >= 2");
    model.config.num_classes = num_classes;
    model.head = make_linear(num_classes, model.config.embed_dim, rng, init_std);
}

Matrix extract_patches(const VitConfig& cfg, const Image& image) {
    check_image(cfg, image);
    const std::size_t p = cfg.patch_size;
    const std::size_t g = cfg.grid();
    Matrix out(cfg.patch_dim(), cfg.num_patches());
    for (std::size_t gy = 0; gy < g; ++gy)
        for (std::size_t gx = 0; gx < g; ++gx) {
            const std::size_t col = gy * g + gx;
            std::size_t r = 0;
            for (std::size_t ch = 0; ch < cfg.channels; ++ch)
                for (std::size_t y = 0; y < p; ++y)
                    for (std::size_t x = 0; x < p; ++x)
                        out(r++, col) = image(ch * cfg.image_size + gy * p + y, gx * p + x);
        }
    return out;
}

std::vector<double> forward_features(const VitModel& model, const Image& image) {
    Matrix x = embed(model, image);
    for (const auto& blk : model.blocks) x = run_block(model, blk, std::move(x));
    const Matrix out = layer_norm(x, model.ln_final);
    return out.col(0);
}

std::vector<double> forward_logits(const VitModel& model, const Image& image) {
    const auto features = forward_features(model, image);
    const Matrix logits = affine(model.head, Matrix::column(features));
    return {logits.values().begin(), logits.values().end()};
}

std::size_t argmax(std::span<const double> logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return best;
}

std::size_t predict(const VitModel& model, const Image& image) {
    return argmax(forward_logits(model, image));
}

Matrix attention_probabilities(const VitModel& model, const Image& image, std::size_t block,
                               std::size_t head) {
    const auto& cfg = model.config;
    if (block >= model.blocks.size() || head >= cfg.num_heads) {
        throw ShapeError("attention_probabilities: block/head out of range");
    }
    Matrix x = embed(model, image);
    for (std::size_t b = 0; b < block; ++b) x = run_block(model, model.blocks[b], std::move(x));
    const Block& blk = model.blocks[block];
    const Matrix h = layer_norm(x, blk.ln1);
    const Matrix q = projection(blk.wq, blk.bq, h);
    const Matrix k = affine(blk.wk, h);
    return head_attention(q, k, head * cfg.head_dim(), cfg.head_dim());
}

namespace {

template <typename Model, typename Fn>
void visit(Model& m, Fn&& fn) {
    fn("patch_embed.w", m.patch_embed.w);
    fn("patch_embed.b", m.patch_embed.b);
    fn("cls_token", m.cls_token);
    fn("pos_embed", m.pos_embed);
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        auto& blk = m.blocks[b];
        const std::string p = "blocks." + std::to_string(b) + ".";
        auto adapted = [&](const std::string& name, auto& layer, auto& bias) {
            fn(p + "attn." + name + ".base", layer.base);
            fn(p + "attn." + name + ".bias", bias);
            for (std::size_t i = 0; i < layer.group.modules.size(); ++i) {
                const std::string lp = p + "attn." + name + ".lora." + std::to_string(i) + ".";
                fn(lp + "A", layer.group.modules[i].A);
                fn(lp + "B", layer.group.modules[i].B);
            }
        };
        fn(p + "ln1.g", blk.ln1.gamma);
        fn(p + "ln1.b", blk.ln1.beta);
        adapted("wq", blk.wq, blk.bq);
        fn(p + "attn.wk.w", blk.wk.w);
        fn(p + "attn.wk.b", blk.wk.b);
        adapted("wv", blk.wv, blk.bv);
        fn(p + "attn.wo.w", blk.wo.w);
        fn(p + "attn.wo.b", blk.wo.b);
        fn(p + "ln2.g", blk.ln2.gamma);
        fn(p + "ln2.b", blk.ln2.beta);
        fn(p + "mlp.fc.w", blk.fc.w);
        fn(p + "mlp.fc.b", blk.fc.b);
        fn(p + "mlp.proj.w", blk.proj.w);
        fn(p + "mlp.proj.b", blk.proj.b);
    }
    fn("ln_final.g", m.ln_final.gamma);
    fn("ln_final.b", m.ln_final.beta);
    fn("head.w", m.head.w);
    fn("head.b", m.head.b);
}

}  // namespace

void for_each_parameter(VitModel& model,
                        const std::function<void(const std::string&, Matrix&)>& fn) {
    visit(model, fn);
}

void for_each_parameter(const VitModel& model,
                        const std::function<void(const std::string&, const Matrix&)>& fn) {
    visit(model, fn);
}

bool is_trainable_name(const std::string& name) {
    if (name.starts_with("head.")) return true;
    const auto pos = name.find(".lora.");
    if (pos == std::string::npos) return false;
    return name.ends_with(".A") || name.ends_with(".B");
}

}  // namespace pego::vit
