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

#include "pego/trainer/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pego/errors.hpp"

namespace pego::trainer {

std::size_t DomainDataset::size() const noexcept {
    std::size_t n = 0;
    for (const auto& d : domains) n += d.samples.size();
    return n;
}

void DomainDataset::validate() const {
    if (domains.size() < 2) throw ConfigError("dataset: need at least 2 domains");
    for (const auto& d : domains) {
        std::vector<std::size_t> counts(num_classes, 0);
        for (const auto& s : d.samples) {
            if (s.label >= num_classes) {
                throw ConfigError("dataset: label out of range in domain '" + d.name + "'");
            }
            ++counts[s.label];
        }
        for (std::size_t c = 0; c < num_classes; ++c) {
            if (counts[c] == 0) {
                throw ConfigError("dataset: domain '" + d.name + "' has no sample of class " +
                                  std::to_string(c));
            }
        }
    }
}

const std::vector<std::string>& shape_family_names() {
    static const std::vector<std::string> names = {"bars",   "cross",    "blob",     "ring",
                                                   "square", "diagonal", "triangle", "dots"};
    return names;
}

DomainStyle domain_style(std::size_t domain, std::uint64_t seed) {
    switch (domain) {
        case 0: return {"plain", 0.0, 1.0, 0, 0.0, 0.05, 2.0};
        case 1: return {"inverted", 1.0, 0.1, 1, 0.15, 0.10, 2.5};
        case 2: return {"checker", 0.3, 0.9, 2, 0.25, 0.15, 1.5};
        case 3: return {"sketch", 0.6, 0.0, 3, 0.30, 0.20, 1.0};
        default: break;
    }
    numerics::Rng rng = numerics::Rng(seed).fork(0x5757 + domain);
    DomainStyle s;
    s.name = "style_" + std::to_string(domain);
    s.background = rng.uniform(0.0, 1.0);
    do {
        s.foreground = rng.uniform(0.0, 1.0);
    } while (std::fabs(s.foreground - s.background) < 0.35);
    s.texture = static_cast<int>(rng.index(4));
    s.texture_amplitude = rng.uniform(0.0, 0.3);
    s.noise = rng.uniform(0.02, 0.2);
    s.thickness = rng.uniform(1.0, 2.5);
    return s;
}

namespace {

// Coverage of the shape at point (x, y) relative to its center.
bool inside(std::size_t family, double dx, double dy, double size, double thick) {
    const double r = std::hypot(dx, dy);
    const double half = 0.5 * thick;
    switch (family) {
        case 0:  // two horizontal bars
            return std::fabs(dx) <= size &&
                   (std::fabs(dy - 0.5 * size) <= half || std::fabs(dy + 0.5 * size) <= half);
        case 1:  // plus sign
            return (std::fabs(dy) <= half && std::fabs(dx) <= size) ||
                   (std::fabs(dx) <= half && std::fabs(dy) <= size);
        case 2: return r <= 0.8 * size;
        case 3: return std::fabs(r - size) <= half;
        case 4: {
            const double m = std::max(std::fabs(dx), std::fabs(dy));
            return m <= size && m >= size - thick;
        }
        case 5:
            return std::fabs(dx - dy) * std::numbers::sqrt2 * 0.5 <= half && std::fabs(dx) <= size &&
                   std::fabs(dy) <= size;
        case 6: return dy <= 0.7 * size && dy >= -size + 2.0 * std::fabs(dx) * 0.85;
        case 7: {
            const double o = 0.6 * size;
            for (double sx : {-1.0, 1.0})
                for (double sy : {-1.0, 1.0})
                    if (std::hypot(dx - sx * o, dy - sy * o) <= std::max(1.0, half + 0.5)) return true;
            return false;
        }
        default: return false;
    }
}

double texture_at(const DomainStyle& s, std::size_t x, std::size_t y, std::size_t n) {
    switch (s.texture) {
        case 1: return (y % 4 < 2 ? 1.0 : -1.0) * s.texture_amplitude;
        case 2: return (((x / 2) + (y / 2)) % 2 == 0 ? 1.0 : -1.0) * s.texture_amplitude;
        case 3: return (static_cast<double>(x + y) / static_cast<double>(2 * n - 2) - 0.5) *
                       2.0 * s.texture_amplitude;
        default: return 0.0;
    }
}

}  // namespace

Matrix render_shape(std::size_t family, const DomainStyle& style, std::size_t image_size,
                    numerics::Rng& rng) {
    const double n = static_cast<double>(image_size);
    const double cx = 0.5 * (n - 1.0) + rng.uniform(-1.5, 1.5) * n / 16.0;
    const double cy = 0.5 * (n - 1.0) + rng.uniform(-1.5, 1.5) * n / 16.0;
    const double size = rng.uniform(0.22, 0.32) * n;
    const double thick = std::max(0.8, style.thickness * rng.uniform(0.85, 1.15) * n / 16.0);
    Matrix img(image_size, image_size);
    constexpr int kSuper = 2;
    for (std::size_t y = 0; y < image_size; ++y)
        for (std::size_t x = 0; x < image_size; ++x) {
            int hits = 0;
            for (int sy = 0; sy < kSuper; ++sy)
                for (int sx = 0; sx < kSuper; ++sx) {
                    const double px = static_cast<double>(x) + (sx + 0.5) / kSuper - 0.5;
                    const double py = static_cast<double>(y) + (sy + 0.5) / kSuper - 0.5;
                    hits += inside(family, px - cx, py - cy, size, thick) ? 1 : 0;
                }
            const double cover = static_cast<double>(hits) / (kSuper * kSuper);
            img(y, x) = style.background + texture_at(style, x, y, image_size) +
                        (style.foreground - style.background) * cover +
                        style.noise * rng.normal();
        }
    return img;
}

DomainDataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    if (spec.domains < 3) throw ConfigError("generate_dataset: need at least 3 domains");
    if (spec.classes < 2 || spec.classes > kShapeFamilies) {
        throw ConfigError("generate_dataset: classes must be in [2, " +
                          std::to_string(kShapeFamilies) + "]");
    }
    if (spec.per_class < 1) throw ConfigError("generate_dataset: per_class must be >= 1");
    if (spec.image_size < 8) throw ConfigError("generate_dataset: image_size must be >= 8");

    DomainDataset ds;
    ds.num_classes = spec.classes;
    ds.image_size = spec.image_size;
    std::size_t next_id = 0;
    for (std::size_t d = 0; d < spec.domains; ++d) {
        const DomainStyle style = domain_style(d, seed);
        numerics::Rng rng = numerics::Rng(seed).fork(d);
        Domain dom{style.name, {}};
        dom.samples.reserve(spec.classes * spec.per_class);
        for (std::size_t i = 0; i < spec.per_class; ++i)
            for (std::size_t c = 0; c < spec.classes; ++c) {
                dom.samples.push_back(
                    {render_shape(c, style, spec.image_size, rng), c, d, next_id++});
            }
        ds.domains.push_back(std::move(dom));
    }
    return ds;
}

DomainDataset generate_pretraining_set(std::size_t samples, std::size_t image_size,
                                       std::uint64_t seed) {
    numerics::Rng rng(seed);
    DomainDataset ds;
    ds.num_classes = kShapeFamilies;
    ds.image_size = image_size;
    Domain dom{"pretrain", {}};
    for (std::size_t i = 0; i < samples; ++i) {
        DomainStyle style{"random"};
        style.background = rng.uniform(0.0, 1.0);
        do {
            style.foreground = rng.uniform(0.0, 1.0);
        } while (std::fabs(style.foreground - style.background) < 0.3);
        style.texture = static_cast<int>(rng.index(4));
        style.texture_amplitude = rng.uniform(0.0, 0.3);
        style.noise = rng.uniform(0.0, 0.2);
        style.thickness = rng.uniform(1.0, 2.5);
        const std::size_t family = i % kShapeFamilies;
        dom.samples.push_back({render_shape(family, style, image_size, rng), family, 0, i});
    }
    ds.domains.push_back(std::move(dom));
    return ds;
}

std::pair<DomainDataset, DomainDataset> split_train_val(const DomainDataset& dataset,
                                                        double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("split_train_val: fraction must lie in (0, 1)");
    }
    DomainDataset train{{}, dataset.num_classes, dataset.image_size};
    DomainDataset val{{}, dataset.num_classes, dataset.image_size};
    for (std::size_t d = 0; d < dataset.domains.size(); ++d) {
        const Domain& dom = dataset.domains[d];
        std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
        for (std::size_t i = 0; i < dom.samples.size(); ++i) {
            by_class.at(dom.samples[i].label).push_back(i);
        }
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            if (!by_class[c].empty() && by_class[c].size() < 2) {
                throw SplitError("split_train_val: class " + std::to_string(c) + " in domain '" +
                                 dom.name + "' has fewer than 2 samples");
            }
        }
        const std::size_t n = dom.samples.size();
        const auto target = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));

        // Per-class floor quotas, then the remainder goes to the classes with
        // the largest fractional parts (lowest class index on ties). Every
        // class keeps at least one training sample.
        std::vector<std::size_t> quota(by_class.size());
        std::vector<double> frac(by_class.size());
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            const double exact = fraction * static_cast<double>(by_class[c].size());
            quota[c] = std::min(static_cast<std::size_t>(std::floor(exact)),
                                by_class[c].empty() ? 0 : by_class[c].size() - 1);
            frac[c] = exact - std::floor(exact);
            assigned += quota[c];
        }
        std::vector<std::size_t> order(by_class.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
        while (assigned < target) {
            bool progressed = false;
            for (std::size_t c : order) {
                if (assigned == target) break;
                if (quota[c] + 1 < by_class[c].size()) {
                    ++quota[c];
                    ++assigned;
                    progressed = true;
                }
            }
            if (!progressed) break;
        }

        numerics::Rng rng = numerics::Rng(seed).fork(0x5117 + d);
        Domain tr{dom.name, {}};
        Domain va{dom.name, {}};
        std::vector<bool> in_val(n, false);
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            auto idx = by_class[c];
            for (std::size_t i = 0; i < quota[c]; ++i) {
                const std::size_t j = i + rng.index(idx.size() - i);
                std::swap(idx[i], idx[j]);
                in_val[idx[i]] = true;
            }
        }
        for (std::size_t i = 0; i < n; ++i) (in_val[i] ? va : tr).samples.push_back(dom.samples[i]);
        train.domains.push_back(std::move(tr));
        val.domains.push_back(std::move(va));
    }
    return {std::move(train), std::move(val)};
}

Batch make_batch(const std::vector<const Domain*>& domains, std::size_t batch_per_domain,
                 numerics::Rng& rng) {
    Batch batch;
    batch.reserve(domains.size() * batch_per_domain);
    std::vector<std::size_t> idx;
    for (const Domain* d : domains) {
        const std::size_t n = d->samples.size();
        if (n == 0) throw InputError("make_batch: domain '" + d->name + "' is empty");
        if (n >= batch_per_domain) {
            idx.resize(n);
            std::iota(idx.begin(), idx.end(), 0);
            for (std::size_t i = 0; i < batch_per_domain; ++i) {
                const std::size_t j = i + rng.index(n - i);
                std::swap(idx[i], idx[j]);
                batch.push_back(d->samples[idx[i]]);
            }
        } else {
            for (std::size_t i = 0; i < batch_per_domain; ++i) {
                batch.push_back(d->samples[rng.index(n)]);
            }
        }
    }
    return batch;
}

}  // namespace pego::trainer
