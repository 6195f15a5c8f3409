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
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pego/numerics/rng.hpp"
#include "pego/sample.hpp"

namespace pego::trainer {

using numerics::Matrix;

struct DatasetSpec {
    std::size_t domains = 4;
    std::size_t classes = 4;
    std::size_t per_class = 100;
    std::size_t image_size = 16;
};

struct Domain {
    std::string name;
    std::vector<Sample> samples;
};

struct DomainDataset {
    std::vector<Domain> domains;
    std::size_t num_classes = 0;
    std::size_t image_size = 0;

    std::size_t size() const noexcept;
    // Throws ConfigError unless there are >= 2 domains and every domain holds
    // every class at least once.
    void validate() const;
};

// Number of procedural shape families available as classes.
inline constexpr std::size_t kShapeFamilies = 8;
const std::vector<std::string>& shape_family_names();

// Rendering style shared by every image of a domain.
struct DomainStyle {
    std::string name;
    double background = 0.0;
    double foreground = 1.0;
    int texture = 0;  // 0 none, 1 stripes, 2 checker, 3 gradient
    double texture_amplitude = 0.0;
    double noise = 0.0;
    double thickness = 2.0;
};

// Styles 0-3 are fixed; further domains draw a style from the seed.
DomainStyle domain_style(std::size_t domain, std::uint64_t seed);

// Renders one image of `family` in `style`; position and size jitter come
// from rng.
Matrix render_shape(std::size_t family, const DomainStyle& style, std::size_t image_size,
                    numerics::Rng& rng);

// Class = shape family, domain = rendering style. Requires >= 3 domains and
// 2 <= classes <= kShapeFamilies. Sample ids are unique across the dataset.
DomainDataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed);

// Single-domain collection with an independent random style per sample over
// all shape families; the synthetic stand-in for large-scale pre-training.
DomainDataset generate_pretraining_set(std::size_t samples, std::size_t image_size,
                                       std::uint64_t seed);

// Per-domain split, stratified by class, with floor(fraction * n) samples of
// each domain going to validation.
std::pair<DomainDataset, DomainDataset> split_train_val(const DomainDataset& dataset,
                                                        double fraction, std::uint64_t seed);

// batch_per_domain samples from each domain, concatenated in domain order.
// Domains smaller than batch_per_domain are sampled with replacement.
Batch make_batch(const std::vector<const Domain*>& domains, std::size_t batch_per_domain,
                 numerics::Rng& rng);

}  // namespace pego::trainer
