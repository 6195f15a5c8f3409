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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "pego/errors.hpp"
#include "pego/lora/group.hpp"
#include "pego/lora/objective.hpp"
#include "pego/numerics/linalg.hpp"

using namespace pego;
using namespace pego::testing;
using lora::AdaptedLinear;
using lora::LoraGroup;
using lora::LoraModule;
using numerics::Matrix;

namespace {

AdaptedLinear random_layer(std::size_t d, std::size_t k, std::size_t r, std::size_t n, Rng& rng) {
    AdaptedLinear layer{rng.gaussian(d, k, 1.0), lora::init_group(d, k, r, n, rng)};
    for (auto& m : layer.group.modules) {
        m.A = rng.gaussian(r, k, 1.0);
        m.B = rng.gaussian(d, r, 1.0);
    }
    return layer;
}

// Direct sums over the definition, used as the reference below.
double preserve_term(const Matrix& w, const LoraModule& m) {
    return numerics::l1_entrywise(numerics::matmul_tn(w, m.delta()));
}

double diversify_term(const LoraModule& a, const LoraModule& b) {
    return numerics::l1_entrywise(numerics::matmul_tn(a.delta(), b.delta()));
}

}  // namespace

TEST_CASE("fresh groups start at zero") {
    Rng rng(1);
    for (std::size_t n : {1, 2, 3, 6}) {
        for (std::size_t r : {1, 2, 4}) {
            AdaptedLinear layer{rng.gaussian(8, 6, 1.0), lora::init_group(8, 6, r, n, rng)};
            CHECK(numerics::l1_entrywise(layer.group.delta()) == 0.0);
            CHECK(lora::loss_preserve(layer) == 0.0);
            CHECK(lora::loss_diversify(layer.group) == 0.0);
            CHECK(lora::loss_orthogonal(layer) == 0.0);
            for (const auto& m : layer.group.modules) {
                CHECK(m.A.rows() == r);
                CHECK(m.A.cols() == 6);
                CHECK(m.B.rows() == 8);
                CHECK(m.B.cols() == r);
            }
        }
    }
    Rng a(5), b(5);
    const auto g1 = lora::init_group(8, 8, 2, 3, a);
    const auto g2 = lora::init_group(8, 8, 2, 3, b);
    for (std::size_t i = 0; i < 3; ++i) CHECK(g1.modules[i].A == g2.modules[i].A);

    Rng c(9);
    vit::VitModel m = vit::init_vit(small_config(), c);
    vit::inject_adapters(m, 4, 4, c);
    CHECK(lora::loss_or(m) == 0.0);
}

TEST_CASE("init std of the A factors") {
    Rng rng(2);
    const auto g = lora::init_group(64, 64, 16, 4, rng);
    double sq = 0;
    std::size_t n = 0;
    for (const auto& m : g.modules)
        for (double v : m.A.values()) {
            sq += v * v;
            ++n;
        }
    CHECK(std::sqrt(sq / n) == doctest::Approx(lora::kLoraInitStd).epsilon(0.03));
}

TEST_CASE("adapted forward") {
    Rng rng(3);
    AdaptedLinear fresh{rng.gaussian(5, 4, 1.0), lora::init_group(5, 4, 2, 3, rng)};
    const Matrix z = rng.gaussian(4, 7, 1.0);
    CHECK(lora::adapted_forward(fresh, z) == numerics::matmul(fresh.base, z));

    AdaptedLinear hand{Matrix::identity(2), LoraGroup{{LoraModule{Matrix{{0, 1}}, Matrix{{1}, {0}}}}}};
    CHECK(lora::adapted_forward(hand, Matrix{{3}, {4}}) == Matrix{{7}, {4}});

    for (int t = 0; t < 20; ++t) {
        const auto layer = random_layer(6, 5, 2, 3, rng);
        const Matrix x = rng.gaussian(5, 9, 1.0);
        const Matrix dense = numerics::matmul(layer.base + layer.group.delta(), x);
        const Matrix fact = lora::adapted_forward(layer, x);
        CHECK(numerics::max_abs_diff(dense, fact) <= 1e-12 * std::max(1.0, numerics::max_abs(dense)));
    }
    CHECK_THROWS_AS(lora::adapted_forward(hand, Matrix(3, 1)), ShapeError);
}

TEST_CASE("preserve loss") {
    AdaptedLinear hand{Matrix::identity(2), LoraGroup{{LoraModule{Matrix{{0, 1}}, Matrix{{1}, {0}}}}}};
    CHECK(lora::loss_preserve(hand) == 1.0);

    // W spans the first two coordinates, the update only touches the last two.
    Rng rng(4);
    Matrix w(4, 3);
    w(0, 0) = 1.5;
    w(1, 1) = -2.0;
    w(0, 2) = 0.5;
    Matrix b = rng.gaussian(4, 2, 1.0);
    b(0, 0) = b(0, 1) = b(1, 0) = b(1, 1) = 0.0;
    AdaptedLinear orth{w, LoraGroup{{LoraModule{rng.gaussian(2, 3, 1.0), b}}}};
    CHECK(lora::loss_preserve(orth) == 0.0);
}

TEST_CASE("diversify loss") {
    Rng rng(5);
    const auto single = random_layer(5, 5, 2, 1, rng);
    CHECK(lora::loss_diversify(single.group) == 0.0);

    const LoraModule e11{Matrix{{1, 0}}, Matrix{{1}, {0}}};
    const LoraModule e22{Matrix{{0, 1}}, Matrix{{0}, {1}}};
    CHECK(lora::loss_diversify(LoraGroup{{e11, e22}}) == 0.0);
    CHECK(lora::loss_diversify(LoraGroup{{e11, e11}}) == 1.0);
}

TEST_CASE("orthogonal loss decomposes and is nonnegative") {
    Rng rng(6);
    for (int t = 0; t < 50; ++t) {
        const auto layer = random_layer(3 + rng.index(6), 3 + rng.index(6), 1 + rng.index(3),
                                        1 + rng.index(4), rng);
        const double p = lora::loss_preserve(layer);
        const double d = lora::loss_diversify(layer.group);
        CHECK(p >= 0.0);
        CHECK(d >= 0.0);
        CHECK(lora::loss_orthogonal(layer) == p + d);

        double want_p = 0.0, want_d = 0.0;
        const auto& mods = layer.group.modules;
        for (std::size_t i = 0; i < mods.size(); ++i) {
            want_p += preserve_term(layer.base, mods[i]);
            for (std::size_t j = i + 1; j < mods.size(); ++j) want_d += diversify_term(mods[i], mods[j]);
        }
        CHECK(p == doctest::Approx(want_p).epsilon(1e-12));
        CHECK(d == doctest::Approx(want_d).epsilon(1e-12));
    }
}

TEST_CASE("diversify loss ignores module order") {
    Rng rng(7);
    for (int t = 0; t < 10; ++t) {
        const auto layer = random_layer(6, 6, 2, 3, rng);
        std::vector<std::size_t> perm{0, 1, 2};
        const double ref = lora::loss_diversify(layer.group);
        const double ref_o = lora::loss_orthogonal(layer);
        do {
            AdaptedLinear p{layer.base, {}};
            for (std::size_t i : perm) p.group.modules.push_back(layer.group.modules[i]);
            CHECK(std::fabs(lora::loss_diversify(p.group) - ref) <= 1e-12 * std::max(1.0, ref));
            CHECK(std::fabs(lora::loss_orthogonal(p) - ref_o) <= 1e-12 * std::max(1.0, ref_o));
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
}

TEST_CASE("scaling one module scales its terms linearly") {
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
        const auto layer = random_layer(6, 5, 2, 3, rng);
        for (double c : {0.0, 0.5, 2.0}) {
            auto scaled = layer;
            scaled.group.modules[1].B *= c;
            const auto& m0 = layer.group.modules;
            const auto& m1 = scaled.group.modules;
            CHECK(preserve_term(scaled.base, m1[1]) ==
                  doctest::Approx(c * preserve_term(layer.base, m0[1])).epsilon(1e-12));
            CHECK(preserve_term(scaled.base, m1[0]) == preserve_term(layer.base, m0[0]));
            CHECK(diversify_term(m1[0], m1[1]) == doctest::Approx(c * diversify_term(m0[0], m0[1])).epsilon(1e-12));
            CHECK(diversify_term(m1[1], m1[2]) == doctest::Approx(c * diversify_term(m0[1], m0[2])).epsilon(1e-12));
            CHECK(diversify_term(m1[0], m1[2]) == diversify_term(m0[0], m0[2]));
        }
    }
}

TEST_CASE("doubling every B doubles preserve and quadruples diversify") {
    Rng rng(9);
    vit::VitModel m = random_adapted_model(small_config(), 3, 2, rng);
    const auto [p, d] = lora::loss_or_terms(m);
    for (auto& blk : m.blocks)
        for (auto* layer : {&blk.wq, &blk.wv})
            for (auto& mod : layer->group.modules) mod.B *= 2.0;
    const auto [p2, d2] = lora::loss_or_terms(m);
    CHECK(p2 == doctest::Approx(2 * p).epsilon(1e-12));
    CHECK(d2 == doctest::Approx(4 * d).epsilon(1e-12));
}

TEST_CASE("model-level loss sums wq and wv over blocks") {
    Rng rng(10);
    vit::VitConfig cfg = small_config();
    cfg.num_blocks = 1;
    const auto m = random_adapted_model(cfg, 2, 2, rng);
    CHECK(lora::loss_or(m) ==
          doctest::Approx(lora::loss_orthogonal(m.blocks[0].wq) + lora::loss_orthogonal(m.blocks[0].wv))
              .epsilon(1e-14));
}

TEST_CASE("rank of the group update is bounded") {
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.index(4), r = 1 + rng.index(3);
        const std::size_t d = 3 + rng.index(12), k = 3 + rng.index(12);
        const auto layer = random_layer(d, k, r, n, rng);
        const auto s = numerics::svd(layer.group.delta());
        CHECK(numerics::numerical_rank(s.singular_values, 1e-10) <= std::min({d, k, n * r}));
    }
}

TEST_CASE("feature-level identity") {
    Rng rng(12);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto layer = random_layer(8, 8, 1 + rng.index(3), 1 + rng.index(3), rng);
        const Matrix z = rng.gaussian(8, 1, 1.0);
        worst = std::max(worst, lora::feature_orthogonality_gap(layer, z.values()));
    }
    CHECK(worst < 1e-9);
    AdaptedLinear fresh{rng.gaussian(8, 8, 1.0), lora::init_group(8, 8, 2, 2, rng)};
    const Matrix z = rng.gaussian(8, 1, 1.0);
    CHECK(lora::feature_orthogonality_gap(fresh, z.values()) == 0.0);
}

TEST_CASE("merge") {
    AdaptedLinear hand{Matrix::identity(2), LoraGroup{{LoraModule{Matrix{{0, 1}}, Matrix{{1}, {0}}}}}};
    const auto merged = lora::merge(hand);
    CHECK(merged.base == Matrix{{1, 1}, {0, 1}});
    CHECK_FALSE(merged.adapted());

    Rng rng(13);
    AdaptedLinear fresh{rng.gaussian(6, 6, 1.0), lora::init_group(6, 6, 2, 3, rng)};
    CHECK(lora::merge(fresh).base.bitwise_equal(fresh.base));
}

TEST_CASE("objective pieces") {
    Rng rng(14);
    vit::VitModel m = random_adapted_model(small_config(), 2, 2, rng);
    Batch batch;
    for (std::size_t i = 0; i < 6; ++i) batch.push_back({random_image(m.config, rng), i % 4, 0, i});

    double ce = 0;
    for (const auto& s : batch) ce += lora::cross_entropy(vit::forward_logits(m, s.image), s.label);
    ce /= batch.size();
    CHECK(lora::final_loss(m, batch, 0.0) == doctest::Approx(ce).epsilon(1e-14));
    CHECK(lora::final_loss(m, batch, 0.5) ==
          doctest::Approx(ce + 0.5 * lora::loss_or(m)).epsilon(1e-12));

    const auto [p, d] = lora::loss_or_terms(m);
    const lora::LossWeights only_p{0.5, true, false};
    CHECK(lora::final_loss(m, batch, only_p) == doctest::Approx(ce + 0.5 * p).epsilon(1e-12));
    const lora::LossWeights neither{0.5, false, false};
    CHECK(lora::final_loss(m, batch, neither) == doctest::Approx(ce).epsilon(1e-14));

    // Uniform logits give ln(C) per sample.
    Rng r2(15);
    vit::VitModel fresh = vit::init_vit(small_config(), r2);
    vit::inject_adapters(fresh, 4, 2, r2);
    fresh.head.w = Matrix(fresh.head.w.rows(), fresh.head.w.cols());
    fresh.head.b = Matrix(fresh.head.b.rows(), 1);
    CHECK(lora::final_loss(fresh, batch, lora::kDefaultAlpha) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(lora::kDefaultAlpha == 1e-3);
    const std::vector<double> big{1000.0, 0.0};
    CHECK(lora::cross_entropy(big, 0) == doctest::Approx(0.0));
    CHECK(lora::cross_entropy(big, 1) == doctest::Approx(1000.0));
}
