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

#include "pego/diagnostics/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "pego/errors.hpp"
#include "pego/numerics/linalg.hpp"
#include "pego/trainer/experiment.hpp"

namespace pego::diagnostics {

using numerics::SvdResult;

PcReport weight_pc_report(const Matrix& w_pre, const Matrix& delta_w, std::size_t k) {
    if (!w_pre.same_shape(delta_w)) {
        throw ShapeError("weight_pc_report: shapes differ, " + w_pre.shape_string() + " vs " +
                         delta_w.shape_string());
    }
    const std::size_t p = std::min(w_pre.rows(), w_pre.cols());
    if (k == 0 || k > p) {
        throw ShapeError("weight_pc_report: k must be in [1, " + std::to_string(p) + "]");
    }
    if (numerics::max_abs(delta_w) == 0.0) {
        throw DegenerateInputError("weight_pc_report: delta_w is identically zero");
    }
    if (!numerics::all_finite(delta_w) || !numerics::all_finite(w_pre)) {
        throw NumericError("weight_pc_report: non-finite weights");
    }

    const SvdResult sw = numerics::svd(w_pre);
    const SvdResult sd = numerics::svd(delta_w);

    PcReport report;
    report.evr_top_k = numerics::explained_variance_ratio(sd, k);
    report.numerical_rank = numerics::numerical_rank(sd.singular_values, kSignificance);
    report.w_rank = numerics::numerical_rank(sw.singular_values, kSignificance);

    // Vectors past the numerical rank are an arbitrary completion of the
    // null space and carry no information about the weights.
    const std::size_t kw = std::min(k, report.w_rank);
    const std::size_t kd = std::min(k, report.numerical_rank);
    report.pc_cosine = Matrix(kw, kd);
    const std::size_t n = w_pre.rows();
    for (std::size_t i = 0; i < kw; ++i) {
        for (std::size_t j = 0; j < kd; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                acc += sw.left_vectors(t, i) * sd.left_vectors(t, j);
            }
            report.pc_cosine(i, j) = std::min(1.0, std::fabs(acc));
        }
    }
    return report;
}

FeatureProjection feature_projection(const std::vector<TaggedModel>& models,
                                     const std::vector<Sample>& samples) {
    if (samples.size() < 2) {
        throw InputError("feature_projection: need at least 2 samples");
    }
    if (models.empty()) {
        throw InputError("feature_projection: no models given");
    }
    std::size_t dim = 0;
    for (const auto& m : models) {
        if (m.model == nullptr) throw InputError("feature_projection: null model '" + m.tag + "'");
        if (dim == 0) dim = m.model->config.embed_dim;
        if (m.model->config.embed_dim != dim) {
            throw ShapeError("feature_projection: models disagree on feature width");
        }
    }

    const std::size_t total = models.size() * samples.size();
    Matrix feats(total, dim);
    std::size_t row = 0;
    for (const auto& m : models) {
        for (const auto& s : samples) {
            const std::vector<double> f = vit::forward_features(*m.model, s.image);
            std::copy(f.begin(), f.end(), feats.row(row).begin());
            ++row;
        }
    }
    std::vector<double> mean(dim, 0.0);
    for (std::size_t r = 0; r < total; ++r) {
        for (std::size_t c = 0; c < dim; ++c) mean[c] += feats(r, c);
    }
    for (auto& v : mean) v /= static_cast<double>(total);
    for (std::size_t r = 0; r < total; ++r) {
        for (std::size_t c = 0; c < dim; ++c) feats(r, c) -= mean[c];
    }

    const SvdResult s = numerics::svd(feats);
    const double s1 = s.singular_values.empty() ? 0.0 : s.singular_values[0];
    if (!(s1 > 1e-12 * std::max(1.0, numerics::max_abs(feats)))) {
        throw DegenerateInputError("feature_projection: all features are identical");
    }

    FeatureProjection out;
    const std::size_t axes = std::min<std::size_t>(2, s.singular_values.size());
    for (std::size_t a = 0; a < axes; ++a) {
        const double sv = s.singular_values[a];
        out.axis_variance.push_back(sv * sv / static_cast<double>(total - 1));
    }
    out.points.reserve(total);
    row = 0;
    for (const auto& m : models) {
        for (const auto& smp : samples) {
            ProjectedPoint p{m.tag, smp.label, 0.0, 0.0};
            for (std::size_t c = 0; c < dim; ++c) {
                p.x += feats(row, c) * s.right_vectors(c, 0);
                if (axes > 1) p.y += feats(row, c) * s.right_vectors(c, 1);
            }
            out.points.push_back(std::move(p));
            ++row;
        }
    }
    return out;
}

LayerRef parse_layer(const std::string& text, const vit::VitModel& model) {
    const auto dot = text.find('.');
    if (dot == std::string::npos) {
        throw ConfigError("layer must look like BLOCK.PROJ, got '" + text + "'");
    }
    LayerRef ref;
    const std::string head = text.substr(0, dot);
    auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), ref.block);
    if (ec != std::errc() || ptr != head.data() + head.size() || head.empty()) {
        throw ConfigError("layer block index is not a number: '" + head + "'");
    }
    ref.proj = text.substr(dot + 1);
    if (ref.proj != "wq" && ref.proj != "wv") {
        throw ConfigError("layer projection must be wq or wv, got '" + ref.proj + "'");
    }
    if (ref.block >= model.blocks.size()) {
        throw ConfigError("layer block " + std::to_string(ref.block) + " out of range (model has " +
                          std::to_string(model.blocks.size()) + ")");
    }
    return ref;
}

LayerRef default_layer(const vit::VitModel& model) {
    if (model.blocks.empty()) throw ConfigError("model has no blocks");
    return {model.blocks.size() - 1, "wv"};
}

const lora::AdaptedLinear& adapted_layer(const vit::VitModel& model, const LayerRef& ref) {
    if (ref.block >= model.blocks.size()) throw ConfigError("layer block out of range");
    const auto& b = model.blocks[ref.block];
    if (ref.proj == "wq") return b.wq;
    if (ref.proj == "wv") return b.wv;
    throw ConfigError("layer projection must be wq or wv");
}

std::string pc_evr_csv(const PcReport& report) {
    std::string out = "component,evr\n";
    for (std::size_t i = 0; i < report.evr_top_k.size(); ++i) {
        out += std::to_string(i) + ',' + trainer::format_number(report.evr_top_k[i]) + '\n';
    }
    return out;
}

std::string pc_cosine_csv(const PcReport& report) {
    std::string out = "i,j,abs_cos\n";
    for (std::size_t i = 0; i < report.pc_cosine.rows(); ++i) {
        for (std::size_t j = 0; j < report.pc_cosine.cols(); ++j) {
            out += std::to_string(i) + ',' + std::to_string(j) + ',' +
                   trainer::format_number(report.pc_cosine(i, j)) + '\n';
        }
    }
    return out;
}

std::string feature_proj_csv(const FeatureProjection& projection) {
    std::string out = "model_tag,label,x,y\n";
    for (const auto& p : projection.points) {
        out += p.model_tag + ',' + std::to_string(p.label) + ',' + trainer::format_number(p.x) +
               ',' + trainer::format_number(p.y) + '\n';
    }
    return out;
}

}  // namespace pego::diagnostics
