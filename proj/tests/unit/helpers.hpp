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

#include "pego/numerics/rng.hpp"
#include "pego/vit/model.hpp"

namespace pego::testing {

using numerics::Matrix;
using numerics::Rng;

inline vit::VitConfig small_config() { return vit::VitConfig{16, 4, 1, 32, 2, 4, 2.0, 4}; }

// Adapters with nonzero B so the group actually changes the function.
inline vit::VitModel random_adapted_model(const vit::VitConfig& cfg, std::size_t n, std::size_t r,
                                          Rng& rng, double b_std = 0.1) {
    vit::VitModel m = vit::init_vit(cfg, rng, 0.2);
    vit::inject_adapters(m, r, n, rng);
    for (auto& blk : m.blocks) {
        for (auto* layer : {&blk.wq, &blk.wv}) {
            for (auto& mod : layer->group.modules) {
                mod.A = rng.gaussian(mod.A.rows(), mod.A.cols(), 0.3);
                mod.B = rng.gaussian(mod.B.rows(), mod.B.cols(), b_std);
            }
        }
    }
    return m;
}

inline Matrix random_image(const vit::VitConfig& cfg, Rng& rng) {
    Matrix img(cfg.channels * cfg.image_size, cfg.image_size);
    for (double& v : img.values()) v = rng.uniform();
    return img;
}

inline double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace pego::testing
