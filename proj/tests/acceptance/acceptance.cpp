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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pego/autograd/grad_check.hpp"
#include "pego/cli/app.hpp"
#include "pego/cli/config.hpp"
#include "pego/diagnostics/analysis.hpp"
#include "pego/errors.hpp"
#include "pego/lora/group.hpp"
#include "pego/lora/objective.hpp"
#include "pego/numerics/linalg.hpp"
#include "pego/trainer/experiment.hpp"
#include "pego/vit/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace pego;
using numerics::Matrix;
using numerics::Rng;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Matrix random_image(const vit::VitConfig& cfg, Rng& rng) {
    Matrix img(cfg.channels * cfg.image_size, cfg.image_size);
    for (double& v : img.values()) v = rng.uniform();
    return img;
}

lora::AdaptedLinear random_layer(std::size_t d, std::size_t k, std::size_t r, std::size_t n, Rng& rng) {
    lora::AdaptedLinear layer{rng.gaussian(d, k, 1.0), lora::init_group(d, k, r, n, rng)};
    for (auto& m : layer.group.modules) {
        m.A = rng.gaussian(r, k, 1.0);
        m.B = rng.gaussian(d, r, 1.0);
    }
    return layer;
}

void merge_equivalence() {
    const auto t0 = Clock::now();
    Rng rng(101);
    double worst = 0.0;
    const std::size_t ns[] = {1, 2, 4};
    const std::size_t rs[] = {2, 4};
    for (int m = 0; m < 20; ++m) {
        vit::VitConfig cfg{16, 4, 1, 32, 2, 4, 2.0, 4};
        vit::VitModel model = vit::init_vit(cfg, rng, 0.2);
        vit::inject_adapters(model, rs[m % 2], ns[m % 3], rng);
        for (auto& blk : model.blocks)
            for (auto* layer : {&blk.wq, &blk.wv})
                for (auto& mod : layer->group.modules) mod.B = rng.gaussian(mod.B.rows(), mod.B.cols(), 0.1);
        const vit::VitModel merged = lora::merge_all(model);
        for (int i = 0; i < 20; ++i) {
            const Matrix img = random_image(cfg, rng);
            const auto a = vit::forward_logits(model, img);
            const auto b = vit::forward_logits(merged, img);
            for (std::size_t c = 0; c < a.size(); ++c) worst = std::max(worst, std::fabs(a[c] - b[c]));
        }
    }
    const double secs = seconds_since(t0);
    report(1, worst <= 1e-9 && secs < 60.0,
           "merge equivalence, max |logit diff| " + fmt("%.3e", worst) + " over 20 models x 20 images (" +
               fmt("%.1f", secs) + " s)");
}

void gradient_oracle() {
    const auto t0 = Clock::now();
    const auto problem = autograd::make_gradcheck_problem(1);
    Rng r0(7), r1(7);
    const auto a = autograd::grad_check(problem.model, problem.batch, lora::LossWeights{0.0, true, true}, 200, r0);
    const auto b = autograd::grad_check(problem.model, problem.batch, lora::LossWeights{1e-3, true, true}, 200, r1);
    const double secs = seconds_since(t0);
    const bool pass = a.max_rel_error < autograd::kGradTolNoReg && b.max_rel_error < autograd::kGradTolReg &&
                      a.attempted == 200 && b.attempted == 200 && secs < 120.0;
    report(2, pass,
           "gradient check, alpha=0 max rel err " + fmt("%.2e", a.max_rel_error) + " (" +
               std::to_string(a.accepted) + "/200 probes), alpha=1e-3 " + fmt("%.2e", b.max_rel_error) + " (" +
               std::to_string(b.accepted) + "/200) in " + fmt("%.1f", secs) + " s");
}

void init_zero() {
    Rng rng(303);
    bool ok = true;
    std::size_t configs = 0;
    for (std::size_t d : {1, 4, 8, 32})
        for (std::size_t k : {1, 5, 32})
            for (std::size_t r : {1, 2, 4})
                for (std::size_t n : {1, 2, 3, 6}) {
                    if (r > std::min(d, k)) continue;
                    const lora::AdaptedLinear layer{rng.gaussian(d, k, 1.0), lora::init_group(d, k, r, n, rng)};
                    ok = ok && lora::loss_preserve(layer) == 0.0 && lora::loss_diversify(layer.group) == 0.0 &&
                         lora::loss_orthogonal(layer) == 0.0;
                    ++configs;
                }
    vit::VitModel model = vit::init_vit(vit::VitConfig{}, rng);
    vit::inject_adapters(model, 4, 4, rng);
    ok = ok && lora::loss_or(model) == 0.0;
    report(3, ok, "fresh groups give exactly zero preserve/diversify/orthogonal loss on " +
                      std::to_string(configs) + " layer configurations and a full model");
}

void feature_identity() {
    Rng rng(404);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto layer = random_layer(8, 8, 1 + rng.index(4), 1 + rng.index(4), rng);
        const Matrix z = rng.gaussian(8, 1, 1.0);
        worst = std::max(worst, lora::feature_orthogonality_gap(layer, z.values()));
    }
    report(4, worst < 1e-9, "feature-level identity, max gap " + fmt("%.3e", worst) + " over 100 pairs");
}

void loss_algebra() {
    Rng rng(505);
    bool nonneg = true, perm = true, homog = true, rank = true;
    auto pres = [](const lora::AdaptedLinear& l, std::size_t i) {
        return numerics::l1_entrywise(numerics::matmul_tn(l.base, l.group.modules[i].delta()));
    };
    auto div = [](const lora::AdaptedLinear& l, std::size_t i, std::size_t j) {
        return numerics::l1_entrywise(
            numerics::matmul_tn(l.group.modules[i].delta(), l.group.modules[j].delta()));
    };
    for (int t = 0; t < 50; ++t) {
        const auto layer = random_layer(3 + rng.index(10), 3 + rng.index(10), 1 + rng.index(3), 3, rng);
        nonneg = nonneg && lora::loss_preserve(layer) >= 0.0 && lora::loss_diversify(layer.group) >= 0.0 &&
                 lora::loss_orthogonal(layer) >= 0.0;

        std::vector<std::size_t> order{0, 1, 2};
        const double ref = lora::loss_diversify(layer.group);
        do {
            lora::LoraGroup g;
            for (std::size_t i : order) g.modules.push_back(layer.group.modules[i]);
            perm = perm && std::fabs(lora::loss_diversify(g) - ref) <= 1e-12 * std::max(1.0, ref);
        } while (std::next_permutation(order.begin(), order.end()));

        auto scaled = layer;
        scaled.group.modules[0].B *= 2.0;
        auto close = [](double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(b)); };
        homog = homog && close(pres(scaled, 0), 2.0 * pres(layer, 0)) && close(pres(scaled, 1), pres(layer, 1)) &&
                close(pres(scaled, 2), pres(layer, 2)) && close(div(scaled, 0, 1), 2.0 * div(layer, 0, 1)) &&
                close(div(scaled, 0, 2), 2.0 * div(layer, 0, 2)) && close(div(scaled, 1, 2), div(layer, 1, 2));
    }
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.index(4), r = 1 + rng.index(3);
        const std::size_t d = 3 + rng.index(14), k = 3 + rng.index(14);
        const auto layer = random_layer(d, k, r, n, rng);
        const auto s = numerics::svd(layer.group.delta());
        rank = rank && numerics::numerical_rank(s.singular_values, 1e-10) <= std::min({d, k, n * r});
    }
    report(5, nonneg && perm && homog && rank,
           std::string("loss algebra: nonnegativity ") + (nonneg ? "ok" : "violated") + ", permutation " +
               (perm ? "ok" : "violated") + ", homogeneity " + (homog ? "ok" : "violated") + ", rank bound " +
               (rank ? "ok" : "violated"));
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct LayerStats {
    std::size_t rank = 0;
    double mean_cos = 0.0;
};

LayerStats analyze_last_wv(const vit::VitModel& adapted) {
    const auto ref = diagnostics::default_layer(adapted);
    const auto& layer = diagnostics::adapted_layer(adapted, ref);
    const auto rep = diagnostics::weight_pc_report(layer.base, layer.group.delta(), 10);
    LayerStats s;
    s.rank = rep.numerical_rank;
    for (double v : rep.pc_cosine.values()) s.mean_cos += v;
    s.mean_cos /= static_cast<double>(rep.pc_cosine.size());
    return s;
}

void rank_growth(const trainer::DomainDataset& data, const vit::VitModel& base) {
    const auto t0 = Clock::now();
    trainer::DomainDataset sources{{}, data.num_classes, data.image_size};
    for (std::size_t d = 1; d < data.domains.size(); ++d) sources.domains.push_back(data.domains[d]);

    struct Arm {
        const char* name;
        double alpha;
        std::size_t n;
        std::vector<LayerStats> stats;
    };
    std::vector<Arm> arms{{"pego", 1e-3, 4, {}}, {"lora", 0.0, 1, {}}, {"stress", 1e-1, 4, {}}, {"plain", 0.0, 4, {}}};
    for (std::uint64_t seed : {0, 1, 2}) {
        const auto [tr, va] = trainer::split_train_val(sources, 0.2, seed);
        for (auto& arm : arms) {
            trainer::TrainConfig cfg = trainer::canonical_config();
            cfg.rank = 2;
            cfg.group_n = arm.n;
            cfg.alpha = arm.alpha;
            cfg.seed = seed;
            trainer::ProtocolAudit audit(0);
            const auto res = trainer::train(base, tr, va, cfg, &audit);
            arm.stats.push_back(analyze_last_wv(res.adapted));
        }
    }
    std::size_t grown = 0, lora_max = 0;
    for (const auto& s : arms[0].stats) grown += s.rank > 2;
    for (const auto& s : arms[1].stats) lora_max = std::max(lora_max, s.rank);
    std::vector<double> stress, plain;
    for (const auto& s : arms[2].stats) stress.push_back(s.mean_cos);
    for (const auto& s : arms[3].stats) plain.push_back(s.mean_cos);
    std::string ranks;
    for (const auto& s : arms[0].stats) ranks += (ranks.empty() ? "" : ",") + std::to_string(s.rank);
    const bool pass = grown >= 2 && lora_max <= 2 && mean(stress) < mean(plain);
    report(8, pass,
           "last-block wv: PEGO (N=4, r=2) rank [" + ranks + "] > 2 in " + std::to_string(grown) +
               "/3 seeds, single LoRA max rank " + std::to_string(lora_max) + ", mean |cos| alpha=0.1 " +
               fmt("%.4f", mean(stress)) + " vs alpha=0 " + fmt("%.4f", mean(plain)) + " (" +
               fmt("%.0f", seconds_since(t0)) + " s)");
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    std::fflush(stdout);
    try {
        merge_equivalence();
        gradient_oracle();
        init_zero();
        feature_identity();
        loss_algebra();

        // Toy experiment shared by the remaining criteria.
        const auto t0 = Clock::now();
        const trainer::TrainConfig cfg = trainer::canonical_config();
        const trainer::PretrainConfig pcfg;
        const vit::VitModel base = trainer::pretrain_base(cfg.vit, pcfg);
        const double pretrain_secs = seconds_since(t0);
        const trainer::DomainDataset data = trainer::generate_dataset(trainer::canonical_dataset_spec(), 0);
        const std::vector<std::uint64_t> seeds{0, 1, 2};
        std::printf("base model pretrained in %.0f s\n", pretrain_secs);
        std::fflush(stdout);

        std::vector<Clock::time_point> finished;
        std::size_t audited = 0, frozen_checks = 0, runs = 0;
        trainer::RunOptions opts;
        opts.on_run = [&](const trainer::RunRecord& r) {
            finished.push_back(Clock::now());
            audited += r.audited_samples;
            frozen_checks += r.frozen_checks;
            ++runs;
        };
        const auto ablation_start = Clock::now();
        bool isolation_held = true;
        std::vector<trainer::AblationRow> rows;
        try {
            rows = trainer::ablate(data, base, cfg, seeds, opts);
        } catch (const ProtocolError& e) {
            isolation_held = false;
            std::printf("protocol violation: %s\n", e.what());
        }
        if (rows.size() != 5) throw Error("ablation did not complete");

        // Rows run one after another, twelve runs each.
        const std::size_t per_row = data.domains.size() * seeds.size();
        auto row_seconds = [&](std::size_t row) {
            const auto begin = row == 0 ? ablation_start : finished[row * per_row - 1];
            return std::chrono::duration<double>(finished[(row + 1) * per_row - 1] - begin).count();
        };
        const auto& pego = rows[0].result;
        const auto& plain = rows[3].result;
        const double exp_secs = pretrain_secs + row_seconds(0) + row_seconds(3);
        const bool c6 = pego.average - 0.25 >= 0.25 && pego.average >= plain.average - 0.02 && exp_secs < 900.0;
        report(6, c6,
               "toy LODO: PEGO " + fmt("%.4f", pego.average) + " +- " + fmt("%.4f", pego.average_stderr) +
                   ", group without regularization " + fmt("%.4f", plain.average) + " +- " +
                   fmt("%.4f", plain.average_stderr) + ", chance 0.25, runtime " + fmt("%.0f", exp_secs) + " s");

        const std::string table = trainer::ablation_csv(data, rows);
        std::printf("%s", table.c_str());
        bool grid = rows.size() == 5 && rows[4].method == "LoRA" && rows[4].group_n == 1;
        std::vector<std::pair<bool, bool>> seen;
        for (std::size_t i = 0; i < 4; ++i) {
            grid = grid && rows[i].method == "PEGO" && rows[i].group_n == cfg.group_n &&
                   rows[i].result.runs.size() == per_row;
            seen.emplace_back(rows[i].preserve, rows[i].diversify);
        }
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        std::size_t lines = 0;
        for (char ch : table) lines += ch == '\n';
        grid = grid && seen.size() == 4 && lines == 6 && !rows[4].preserve && !rows[4].diversify;
        report(7, grid, "ablation table has the 2x2 preserve/diversify grid plus the single-LoRA row, "
                        "mean and stderr over 3 seeds per domain");

        rank_growth(data, base);

        // Rerun the PEGO row through the command-line tool and compare bytes.
        const fs::path dir = fs::temp_directory_path() / ("pego_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        cli::save_dataset(dir / "data.bin", data);
        vit::save_model(dir / "base.ckpt", base);
        const std::string ds_arg = (dir / "data.bin").string(), base_arg = (dir / "base.ckpt").string(),
                          out_arg = (dir / "lodo").string();
        const char* argv[] = {"pego", "lodo", "--dataset", ds_arg.c_str(), "--base", base_arg.c_str(),
                              "--out", out_arg.c_str()};
        std::ostringstream sink_out, sink_err;
        const int code = cli::run(8, argv, sink_out, sink_err);
        std::string rerun;
        if (code == 0) {
            std::ifstream in(dir / "lodo" / "summary.csv", std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            rerun = ss.str();
        } else {
            std::printf("rerun failed: %s\n", sink_err.str().c_str());
        }
        fs::remove_all(dir);
        const bool same = code == 0 && rerun == trainer::summary_csv(data, pego);
        const bool frozen_ok = frozen_checks == runs && runs == 5 * per_row;
        report(9, isolation_held && frozen_ok && same && audited > 0,
               "protocol: isolation held over " + std::to_string(audited) + " audited samples, frozen weights "
               "bitwise unchanged in " + std::to_string(frozen_checks) + "/" + std::to_string(runs) +
               " runs, rerun summary CSV " + (same ? "byte-identical" : "DIFFERS"));
    } catch (const std::exception& e) {
        std::printf("FAIL aborted: %s\n", e.what());
        ++failures;
    }

    const trainer::TrainConfig def;
    const bool c10 = def.alpha == 1e-3 && def.rank == 4 && def.lr == 5e-4 && def.val_fraction == 0.2 &&
                     trainer::TrainConfig::group_n_search_space() == std::vector<std::size_t>{2, 4, 6};
    report(10, c10, "defaults alpha=1e-3, rank=4, lr=5e-4, val fraction 0.2, group sizes {2,4,6}");

    std::printf("%s (%d failing)\n", failures == 0 ? "ALL PASS" : "SOME FAILED", failures);
    return failures == 0 ? 0 : 1;
}
