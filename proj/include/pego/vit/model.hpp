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
#include <functional>
#include <string>
#include <vector>

#include "pego/lora/group.hpp"
#include "pego/numerics/matrix.hpp"
#include "pego/numerics/rng.hpp"

namespace pego::vit {

using numerics::Matrix;

struct VitConfig {
    std::size_t image_size = 16;
    std::size_t patch_size = 4;
    std::size_t channels = 1;
    std::size_t embed_dim = 32;
    std::size_t num_blocks = 2;
    std::size_t num_heads = 4;
    double mlp_ratio = 2.0;
    std::size_t num_classes = 4;

    std::size_t grid() const noexcept { return image_size / patch_size; }
    std::size_t num_patches() const noexcept { return grid() * grid(); }
    // Patch tokens plus the class token.
    std::size_t num_tokens() const noexcept { return num_patches() + 1; }
    std::size_t patch_dim() const noexcept { return channels * patch_size * patch_size; }
    std::size_t head_dim() const noexcept { return embed_dim / num_heads; }
    std::size_t mlp_dim() const noexcept;

    // Throws ConfigError describing the first violated constraint.
    void validate() const;

    friend bool operator==(const VitConfig&, const VitConfig&) = default;
};

struct Linear {
    Matrix w;  // out x in
    Matrix b;  // out x 1
};

struct LayerNorm {
    Matrix gamma;  // d x 1
    Matrix beta;   // d x 1
};

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kInitStd = 0.02;

// Pre-norm transformer block. Only the query and value projections are
// adapter hook points; their biases stay frozen.
struct Block {
    LayerNorm ln1;
    lora::AdaptedLinear wq;
    Matrix bq;
    Linear wk;
    lora::AdaptedLinear wv;
    Matrix bv;
    Linear wo;
    LayerNorm ln2;
    Linear fc;
    Linear proj;
};

struct VitModel {
    VitConfig config;
    Linear patch_embed;  // d x patch_dim
    Matrix cls_token;    // d x 1
    Matrix pos_embed;    // d x num_tokens
    std::vector<Block> blocks;
    LayerNorm ln_final;
    Linear head;  // num_classes x d

    bool has_adapters() const noexcept;
    // (rank, group size) of the adapters, or (0, 0) when there are none.
    std::pair<std::size_t, std::size_t> adapter_shape() const noexcept;
};

// Images are (channels * image_size) x image_size matrices, channel planes
// stacked vertically.
using Image = Matrix;

VitModel init_vit(const VitConfig& cfg, numerics::Rng& rng, double init_std = kInitStd);

// Attaches a fresh group of n rank-r adapters to wq and wv of every block.
void inject_adapters(VitModel& model, std::size_t rank, std::size_t n, numerics::Rng& rng);
// Removes every adapter group without merging.
void strip_adapters(VitModel& model);
// Fresh head for `num_classes` outputs (weights N(0, init_std^2), zero bias).
void reset_head(VitModel& model, std::size_t num_classes, numerics::Rng& rng,
                double init_std = kInitStd);

// Columns are flattened patches in raster order; within a patch the layout
// is channel, then row, then column.
Matrix extract_patches(const VitConfig& cfg, const Image& image);

std::vector<double> forward_features(const VitModel& model, const Image& image);
std::vector<double> forward_logits(const VitModel& model, const Image& image);
std::size_t argmax(std::span<const double> logits);
std::size_t predict(const VitModel& model, const Image& image);

// Row-wise attention probabilities of one block and head, for inspection.
Matrix attention_probabilities(const VitModel& model, const Image& image, std::size_t block,
                               std::size_t head);

// Named parameter traversal following the checkpoint naming scheme, e.g.
// "blocks.0.attn.wq.base" or "blocks.1.attn.wv.lora.2.B".
void for_each_parameter(VitModel& model, const std::function<void(const std::string&, Matrix&)>& fn);
void for_each_parameter(const VitModel& model,
                        const std::function<void(const std::string&, const Matrix&)>& fn);

// True exactly for adapter factors and the classifier head.
bool is_trainable_name(const std::string& name);

}  // namespace pego::vit
