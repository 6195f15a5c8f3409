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

#include <cmath>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "pego/autograd/grad_check.hpp"
#include "pego/errors.hpp"
#include "pego/lora/objective.hpp"
#include "pego/trainer/adam.hpp"
#include "pego/trainer/experiment.hpp"

using namespace pego;
using namespace pego::testing;
using namespace pego::trainer;

namespace {

// Small problem that trains in well under a second per run.
struct Tiny {
    DomainDataset data;
    vit::VitModel base;
    TrainConfig cfg;
};

Tiny tiny_problem() {
    Tiny t;
    t.data = generate_dataset(DatasetSpec{4, 3, 10, 8}, 3);
    t.cfg.vit = vit::VitConfig{8, 4, 1, 8, 1, 2, 2.0, 3};
    t.cfg.iterations = 20;
    t.cfg.eval_every = 5;
    t.cfg.batch_per_domain = 4;
    t.cfg.rank = 2;
    t.cfg.group_n = 2;
    Rng rng(1);
    t.base = vit::init_vit(t.cfg.vit, rng, 0.2);
    return t;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("reference defaults") {
    const TrainConfig cfg;
    CHECK(cfg.alpha == 1e-3);
    CHECK(cfg.rank == 4);
    CHECK(cfg.lr == 5e-4);
    CHECK(cfg.val_fraction == 0.2);
    CHECK(cfg.batch_per_domain == 32);
    CHECK(TrainConfig::group_n_search_space() == std::vector<std::size_t>{2, 4, 6});
    CHECK(TrainConfig::kLongIterations == 5000);
    CHECK(kAdamBeta1 == 0.9);
    CHECK(kAdamBeta2 == 0.999);
    CHECK(kAdamEps == 1e-8);
    const TrainConfig canon = canonical_config();
    CHECK(canon.iterations == 500);
    CHECK(canon.vit.embed_dim == 32);
    CHECK(canon.vit.num_blocks == 2);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.alpha = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.rank = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.val_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.group_n = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("dataset generation") {
    const auto ds = generate_dataset(DatasetSpec{4, 4, 50, 16}, 1);
    CHECK(ds.size() == 800);
    CHECK(ds.domains.size() == 4);
    std::set<std::size_t> ids;
    for (std::size_t d = 0; d < 4; ++d) {
        std::vector<std::size_t> per_class(4, 0);
        for (const auto& s : ds.domains[d].samples) {
            CHECK(s.domain == d);
            CHECK(s.image.rows() == 16);
            CHECK(s.image.cols() == 16);
            ++per_class[s.label];
            ids.insert(s.id);
            for (double v : s.image.values()) REQUIRE(std::isfinite(v));
        }
        for (std::size_t c : per_class) CHECK(c == 50);
    }
    CHECK(ids.size() == 800);

    const auto again = generate_dataset(DatasetSpec{4, 4, 50, 16}, 1);
    const auto other = generate_dataset(DatasetSpec{4, 4, 50, 16}, 2);
    bool same = true, differs = false;
    for (std::size_t d = 0; d < 4; ++d)
        for (std::size_t i = 0; i < ds.domains[d].samples.size(); ++i) {
            same = same && ds.domains[d].samples[i].image.bitwise_equal(again.domains[d].samples[i].image);
            differs = differs || !ds.domains[d].samples[i].image.bitwise_equal(other.domains[d].samples[i].image);
        }
    CHECK(same);
    CHECK(differs);
    CHECK_THROWS_AS(generate_dataset(DatasetSpec{4, 9, 10, 16}, 1), ConfigError);
    CHECK_THROWS_AS(generate_dataset(DatasetSpec{2, 4, 10, 16}, 1), ConfigError);
}

TEST_CASE("domains differ in appearance") {
    const auto ds = generate_dataset(DatasetSpec{4, 4, 50, 16}, 1);
    std::vector<double> means;
    for (const auto& d : ds.domains) {
        double s = 0;
        for (const auto& smp : d.samples)
            for (double v : smp.image.values()) s += v;
        means.push_back(s / (d.samples.size() * 256.0));
    }
    // plain and inverted styles sit on opposite sides of mid gray
    CHECK(std::fabs(means[0] - means[1]) > 0.2);
}

TEST_CASE("a linear probe on raw pixels learns the classes") {
    const auto ds = generate_dataset(canonical_dataset_spec(), 11);
    // softmax regression on three domains, scored in-domain on held-back samples
    const std::size_t px = 256, classes = 4;
    // pixels standardized per image so the inverted style does not cancel the plain one
    std::vector<Sample> train, test;
    for (std::size_t d = 0; d < 3; ++d)
        for (std::size_t i = 0; i < ds.domains[d].samples.size(); ++i) {
            Sample s = ds.domains[d].samples[i];
            double mu = 0, var = 0;
            for (double v : s.image.values()) mu += v;
            mu /= px;
            for (double v : s.image.values()) var += (v - mu) * (v - mu);
            const double sd = std::sqrt(var / px) + 1e-8;
            for (double& v : s.image.values()) v = (v - mu) / sd;
            (i % 5 == 0 ? test : train).push_back(std::move(s));
        }
    Matrix w(classes, px + 1);
    for (int epoch = 0; epoch < 100; ++epoch) {
        Matrix g(classes, px + 1);
        for (const auto& s : train) {
            std::vector<double> z(classes, 0.0);
            for (std::size_t c = 0; c < classes; ++c) {
                z[c] = w(c, px);
                for (std::size_t j = 0; j < px; ++j) z[c] += w(c, j) * s.image[j];
            }
            const double mx = *std::max_element(z.begin(), z.end());
            double sum = 0;
            for (double& v : z) sum += (v = std::exp(v - mx));
            for (std::size_t c = 0; c < classes; ++c) {
                const double d = z[c] / sum - (c == s.label ? 1.0 : 0.0);
                for (std::size_t j = 0; j < px; ++j) g(c, j) += d * s.image[j];
                g(c, px) += d;
            }
        }
        g *= 0.05 / train.size();
        w -= g;
    }
    std::size_t hit = 0;
    for (const auto& s : test) {
        std::vector<double> z(classes, 0.0);
        for (std::size_t c = 0; c < classes; ++c) {
            z[c] = w(c, px);
            for (std::size_t j = 0; j < px; ++j) z[c] += w(c, j) * s.image[j];
        }
        hit += vit::argmax(z) == s.label;
    }
    CHECK(static_cast<double>(hit) / test.size() > 1.0 / classes + 0.1);
}

TEST_CASE("train/validation split") {
    const auto ds = generate_dataset(DatasetSpec{4, 4, 25, 16}, 1);
    const auto [tr, va] = split_train_val(ds, 0.2, 5);
    for (std::size_t d = 0; d < 4; ++d) {
        CHECK(va.domains[d].samples.size() == 20);
        CHECK(tr.domains[d].samples.size() == 80);
        std::vector<std::size_t> per_class(4, 0);
        for (const auto& s : va.domains[d].samples) ++per_class[s.label];
        for (std::size_t c : per_class) CHECK(c == 5);
        std::set<std::size_t> all, t, v;
        for (const auto& s : ds.domains[d].samples) all.insert(s.id);
        for (const auto& s : tr.domains[d].samples) t.insert(s.id);
        for (const auto& s : va.domains[d].samples) v.insert(s.id);
        std::set<std::size_t> uni = t;
        uni.insert(v.begin(), v.end());
        CHECK(uni == all);
        CHECK(t.size() + v.size() == all.size());
    }
    const auto [tr2, va2] = split_train_val(ds, 0.2, 5);
    for (std::size_t d = 0; d < 4; ++d)
        for (std::size_t i = 0; i < 20; ++i) CHECK(va.domains[d].samples[i].id == va2.domains[d].samples[i].id);

    auto tiny = ds;
    tiny.domains[0].samples.resize(1);
    CHECK_THROWS(split_train_val(tiny, 0.2, 1));
}

TEST_CASE("batch construction") {
    const auto ds = generate_dataset(canonical_dataset_spec(), 1);
    const std::vector<const Domain*> three{&ds.domains[0], &ds.domains[1], &ds.domains[2]};
    Rng a(3), b(3);
    const Batch big = make_batch(three, 32, a);
    CHECK(big.size() == 96);
    const Batch again = make_batch(three, 32, b);
    for (std::size_t i = 0; i < big.size(); ++i) CHECK(big[i].id == again[i].id);
    for (std::size_t i = 0; i < 96; ++i) CHECK(big[i].domain == i / 32);
    std::set<std::size_t> ids;
    for (const auto& s : big) ids.insert(s.id);
    CHECK(ids.size() == 96);
    CHECK(make_batch(three, 8, a).size() == 24);
}

TEST_CASE("adam step") {
    Matrix p{{1.0}};
    const Matrix g{{1.0}};
    AdamState st;
    const ParamSlot slot{"p", &p, &g};
    adam_step({&slot, 1}, st, 0.1);
    CHECK(st.t == 1);
    CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-7));

    Matrix q{{2.0, -1.0}};
    const Matrix zero(1, 2);
    AdamState s2;
    const ParamSlot zslot{"q", &q, &zero};
    adam_step({&zslot, 1}, s2, 0.1);
    CHECK(s2.t == 1);
    CHECK(q == Matrix{{2.0, -1.0}});

    Matrix r{{0.3, 0.7}};
    const Matrix gr{{5.0, -2.0}};
    AdamState s3;
    const ParamSlot rslot{"r", &r, &gr};
    for (int i = 0; i < 5; ++i) adam_step({&rslot, 1}, s3, 0.0);
    CHECK(r == Matrix{{0.3, 0.7}});

    const Matrix nan{{std::nan(""), 0.0}};
    const ParamSlot bad{"r", &r, &nan};
    CHECK_THROWS_AS(adam_step({&bad, 1}, s3, 0.1), NumericError);
    CHECK(r == Matrix{{0.3, 0.7}});

    // second step against a hand computation
    Matrix x{{0.0}};
    AdamState s4;
    const Matrix g1{{1.0}}, g2{{-2.0}};
    const ParamSlot x1{"x", &x, &g1}, x2{"x", &x, &g2};
    adam_step({&x1, 1}, s4, 0.01);
    adam_step({&x2, 1}, s4, 0.01);
    const double m = 0.9 * 0.1 + 0.1 * -2.0;
    const double v = 0.999 * 0.001 + 0.001 * 4.0;
    const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
    CHECK(x(0, 0) == doctest::Approx(-0.01 - 0.01 * mh / (std::sqrt(vh) + 1e-8)).epsilon(1e-9));
}

TEST_CASE("model-level adam step leaves frozen weights alone") {
    Rng rng(4);
    const auto p = autograd::make_gradcheck_problem(2);
    vit::VitModel m = p.model;
    AdamState st;
    for (int i = 0; i < 3; ++i) {
        const auto res = autograd::backward(m, p.batch, lora::LossWeights{});
        adam_step(m, res.grads, st, 1e-2);
    }
    CHECK(frozen_parameters_equal(m, p.model));
    CHECK_FALSE(m.head.w.bitwise_equal(p.model.head.w));
}

TEST_CASE("zero iterations return the base") {
    auto t = tiny_problem();
    t.cfg.iterations = 0;
    const auto [tr, va] = split_train_val(t.data, 0.2, 1);
    const auto res = train(t.base, tr, va, t.cfg);
    CHECK(res.history.empty());
    CHECK(frozen_parameters_equal(res.merged, t.base));
    for (std::size_t b = 0; b < t.base.blocks.size(); ++b) {
        CHECK(res.merged.blocks[b].wq.base.bitwise_equal(t.base.blocks[b].wq.base));
        CHECK(res.merged.blocks[b].wv.base.bitwise_equal(t.base.blocks[b].wv.base));
    }
}

TEST_CASE("training bookkeeping and determinism") {
    auto t = tiny_problem();
    t.cfg.iterations = 23;
    const auto [tr, va] = split_train_val(t.data, 0.2, 1);
    const auto a = train(t.base, tr, va, t.cfg);
    CHECK(a.history.size() == 23);
    for (const auto& row : a.history) {
        const bool expected = row.iter % 5 == 0 || row.iter == 23;
        CHECK(row.val_acc.has_value() == expected);
    }
    CHECK(a.best_val_acc >= 0.0);
    CHECK(a.best_val_acc <= 1.0);
    const bool on_cadence = a.selected_iter % 5 == 0 || a.selected_iter == 23;
    CHECK(on_cadence);
    CHECK(frozen_parameters_equal(a.adapted, t.base));
    CHECK_FALSE(a.merged.has_adapters());

    const auto b = train(t.base, tr, va, t.cfg);
    CHECK(history_csv(a.history) == history_csv(b.history));
    const Matrix img = t.data.domains[0].samples[0].image;
    CHECK(vit::forward_logits(a.merged, img) == vit::forward_logits(b.merged, img));
    CHECK(max_diff(vit::forward_logits(a.merged, img), vit::forward_logits(a.adapted, img)) < 1e-10);
}

TEST_CASE("training reduces the loss on the canonical task") {
    const auto ds = generate_dataset(canonical_dataset_spec(), 0);
    TrainConfig cfg = canonical_config();
    Rng rng(77);
    const vit::VitModel base = vit::init_vit(cfg.vit, rng);
    DomainDataset src{{}, ds.num_classes, ds.image_size};
    for (std::size_t d = 1; d < 4; ++d) src.domains.push_back(ds.domains[d]);
    for (std::uint64_t seed : {0, 1, 2}) {
        cfg.seed = seed;
        const auto [tr, va] = split_train_val(src, cfg.val_fraction, seed);
        const auto res = train(base, tr, va, cfg);
        double tail = 0;
        for (std::size_t i = res.history.size() - 50; i < res.history.size(); ++i) tail += res.history[i].loss_cls;
        CHECK(tail / 50 < std::log(4.0));
    }
}

TEST_CASE("protocol audit") {
    ProtocolAudit audit(2);
    Sample ok{Matrix(1, 1), 0, 1, 10};
    Sample leak{Matrix(1, 1), 0, 2, 11};
    CHECK_NOTHROW(audit.check(ok, "gradient step"));
    CHECK_THROWS_AS(audit.check(leak, "gradient step"), ProtocolError);
    CHECK(audit.samples_checked() >= 1);
}

TEST_CASE("leave one domain out") {
    auto t = tiny_problem();
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    const auto r = leave_one_domain_out(t.data, t.base, t.cfg, seeds);
    CHECK(r.runs.size() == 12);
    CHECK(r.per_domain.size() == 4);
    for (const auto& run : r.runs) {
        CHECK(run.accuracy >= 0.0);
        CHECK(run.accuracy <= 1.0);
        CHECK(run.audited_samples > 0);
        CHECK(run.frozen_checks == 1);
    }
    for (const auto& d : r.per_domain) CHECK(d.stderr_ >= 0.0);
    const std::string csv = summary_csv(t.data, r);
    CHECK(csv.rfind("test_domain,seed,accuracy,selected_iter\n", 0) == 0);
    CHECK(count_lines(csv) == 13);
    CHECK(csv.find('\r') == std::string::npos);

    RunOptions par;
    par.jobs = 3;
    const auto r2 = leave_one_domain_out(t.data, t.base, t.cfg, seeds, par);
    CHECK(summary_csv(t.data, r2) == csv);
}

TEST_CASE("ablation grid shape") {
    auto t = tiny_problem();
    t.cfg.iterations = 5;
    const std::vector<std::uint64_t> seeds{0, 1};
    const auto rows = ablate(t.data, t.base, t.cfg, seeds);
    REQUIRE(rows.size() == 5);
    std::set<std::pair<bool, bool>> grid;
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(rows[i].method == "PEGO");
        CHECK(rows[i].group_n == t.cfg.group_n);
        grid.insert({rows[i].preserve, rows[i].diversify});
    }
    CHECK(grid.size() == 4);
    CHECK(rows[4].method == "LoRA");
    CHECK(rows[4].group_n == 1);
    CHECK_FALSE(rows[4].preserve);
    CHECK_FALSE(rows[4].diversify);
    CHECK(count_lines(ablation_csv(t.data, rows)) == 6);
}

TEST_CASE("group size selection") {
    const std::vector<std::pair<std::size_t, double>> c{{2, 0.5}, {4, 0.7}, {6, 0.7}};
    CHECK(select_by_validation(c) == 1);
    const std::vector<std::pair<std::size_t, double>> one{{6, 0.1}};
    CHECK(select_by_validation(one) == 0);

    auto t = tiny_problem();
    t.cfg.iterations = 5;
    const std::vector<std::uint64_t> seeds{0};
    const std::vector<std::size_t> single{4};
    const auto s = sweep_n(t.data, t.base, t.cfg, single, seeds);
    CHECK(s.best_n == 4);
    CHECK(s.entries.size() == 1);
}

TEST_CASE("statistics and number formatting") {
    const std::vector<double> xs{1.0, 2.0, 3.0};
    const auto [m, se] = mean_stderr(xs);
    CHECK(m == 2.0);
    CHECK(se == doctest::Approx(1.0 / std::sqrt(3.0)));
    const std::vector<double> one{0.5};
    CHECK(mean_stderr(one).second == 0.0);
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(0.25) == "0.25");
    CHECK(format_number(1e-3) == "0.001");
}
