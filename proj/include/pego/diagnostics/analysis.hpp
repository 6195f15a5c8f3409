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
#include <string>
#include <vector>

#include "pego/numerics/matrix.hpp"
#include "pego/sample.hpp"
#include "pego/vit/model.hpp"

namespace pego::diagnostics {

using numerics::Matrix;

// A principal component counts as significant when sigma > kSignificance * sigma_1.
inline constexpr double kSignificance = 1e-3;

struct PcReport {
    std::vector<double> evr_top_k;  // from the singular values of delta_w
    // |cos| between left singular vectors: rows index PCs of w_pre, columns
    // PCs of delta_w. Only significant components take part.
    Matrix pc_cosine;
    std::size_t numerical_rank = 0;  // of delta_w
    std::size_t w_rank = 0;          // of w_pre
};

PcReport weight_pc_report(const Matrix& w_pre, const Matrix& delta_w, std::size_t k);

struct ProjectedPoint {
    std::string model_tag;
    std::size_t label = 0;
    double x = 0.0;
    double y = 0.0;
};

struct FeatureProjection {
    std::vector<ProjectedPoint> points;  // model-major, then sample order
    std::vector<double> axis_variance;   // variance captured by each axis
};

struct TaggedModel {
    std::string tag;
    const vit::VitModel* model = nullptr;
};

// Shared 2-D PCA basis fitted on the pooled, mean-centered features of all
// (model, sample) pairs.
FeatureProjection feature_projection(const std::vector<TaggedModel>& models,
                                     const std::vector<Sample>& samples);

// Target layer for the weight analysis, e.g. "1.wv". Only adapted projections
// (wq, wv) are accepted.
struct LayerRef {
    std::size_t block = 0;
    std::string proj = "wv";
};

LayerRef parse_layer(const std::string& text, const vit::VitModel& model);
LayerRef default_layer(const vit::VitModel& model);
const lora::AdaptedLinear& adapted_layer(const vit::VitModel& model, const LayerRef& ref);

std::string pc_evr_csv(const PcReport& report);
std::string pc_cosine_csv(const PcReport& report);
std::string feature_proj_csv(const FeatureProjection& projection);

}  // namespace pego::diagnostics
