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

#include "pego/cli/app.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pego/autograd/grad_check.hpp"
#include "pego/cli/config.hpp"
#include "pego/diagnostics/analysis.hpp"
#include "pego/errors.hpp"
#include "pego/trainer/experiment.hpp"
#include "pego/vit/checkpoint.hpp"

#ifndef PEGO_VERSION
#define PEGO_VERSION "0.0.0"
#endif

namespace pego::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const DegenerateInputError*>(&e)) return kExitDegenerate;
    if (dynamic_cast<const FormatError*>(&e)) return kExitIo;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitIo;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InputError*>(&e) ||
        dynamic_cast<const SplitError*>(&e)) {
        return kExitConfig;
    }
    return kExitCheckFailed;
}

namespace {

struct Options {
    std::string config;
    std::string dataset;
    std::string out;
    std::string base;
    std::string checkpoint;
    std::string domain;
    std::string layer;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    std::optional<double> alpha;
    std::optional<std::size_t> rank;
    std::optional<std::size_t> group_n;
    std::optional<double> lr;
    std::optional<std::size_t> iters;
    bool long_iters = false;
    std::size_t test_domain = 0;
    std::size_t samples = 200;
    std::size_t k = 10;
    std::size_t max_samples = 200;
    bool inject_sign_bug = false;
};

class Manifest {
public:
    Manifest(std::vector<std::string> argv, const RunConfig& cfg)
        : argv_(std::move(argv)), cfg_(cfg), start_(std::chrono::steady_clock::now()) {}

    void artifact(const std::string& key, const fs::path& path) { artifacts_[key] = path.string(); }

    void write(const fs::path& path, const std::vector<std::uint64_t>& seeds) const {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json j;
        j["command_line"] = argv_;
        j["config_hash"] = config_hash(cfg_);
        j["config"] = to_json(cfg_);
        j["seeds"] = seeds;
        j["artifacts"] = artifacts_;
        j["wall_clock_seconds"] = secs;
        j["version"] = PEGO_VERSION;
        write_text_atomic(path, j.dump(2) + "\n");
    }

private:
    std::vector<std::string> argv_;
    RunConfig cfg_;
    std::map<std::string, std::string> artifacts_;
    std::chrono::steady_clock::time_point start_;
};

RunConfig resolve_config(const Options& o, std::ostream& err) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    auto& t = cfg.train;
    if (o.alpha) t.alpha = *o.alpha;
    if (o.rank) t.rank = *o.rank;
    if (o.group_n) t.group_n = *o.group_n;
    if (o.lr) t.lr = *o.lr;
    if (o.iters) t.iterations = *o.iters;
    if (o.long_iters) t.iterations = trainer::TrainConfig::kLongIterations;
    t.validate();
    for (const auto& w : default_deviation_warnings(t)) err << "warning: " << w << "\n";
    return cfg;
}

// A seed override replaces the first seed and keeps the seed count.
std::vector<std::uint64_t> resolve_seeds(const Options& o, const RunConfig& cfg) {
    if (!o.seed) return cfg.seeds;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) seeds.push_back(*o.seed + i);
    return seeds;
}

fs::path prepare_out_dir(const std::string& out) {
    if (out.empty()) throw ConfigError("--out is required");
    const fs::path dir(out);
    if (fs::is_directory(dir)) return dir;
    const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
    if (!fs::is_directory(parent)) {
        throw ConfigError("output directory parent '" + parent.string() + "' does not exist");
    }
    std::error_code ec;
    fs::create_directory(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out + "': " + ec.message());
    return dir;
}

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw ConfigError(std::string(flag) + " is required");
}

vit::VitModel resolve_base(const Options& o, const RunConfig& cfg, const fs::path& out_dir,
                           Manifest& manifest, std::ostream& out) {
    if (!o.base.empty()) {
        vit::VitModel base = vit::load_model(o.base);
        vit::VitConfig want = cfg.train.vit;
        want.num_classes = base.config.num_classes;
        if (!(base.config == want)) {
            throw ConfigError("base checkpoint architecture does not match the config");
        }
        if (base.has_adapters()) throw ConfigError("base checkpoint already carries adapters");
        manifest.artifact("base", o.base);
        return base;
    }
    out << "pretraining base model (" << cfg.pretrain.iterations << " steps)\n" << std::flush;
    vit::VitModel base = trainer::pretrain_base(cfg.train.vit, cfg.pretrain);
    const fs::path path = out_dir / "base.ckpt";
    vit::save_model(path, base);
    manifest.artifact("base", path);
    return base;
}

std::size_t resolve_domain(const trainer::DomainDataset& ds, const std::string& text) {
    for (std::size_t d = 0; d < ds.domains.size(); ++d) {
        if (ds.domains[d].name == text) return d;
    }
    std::size_t idx = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), idx);
    if (ec != std::errc() || ptr != text.data() + text.size() || idx >= ds.domains.size()) {
        throw ConfigError("unknown domain '" + text + "'");
    }
    return idx;
}

std::string fixed(double x, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << x;
    return s.str();
}

void print_lodo(std::ostream& out, const std::string& label, const trainer::LodoResult& r) {
    out << label;
    for (const auto& d : r.per_domain) {
        out << "  " << d.name << " " << fixed(d.mean) << "+-" << fixed(d.stderr_);
    }
    out << "  avg " << fixed(r.average) << "+-" << fixed(r.average_stderr) << "\n";
}

int cmd_gen(const Options& o, std::ostream& out,
            std::ostream& err) {
    RunConfig cfg = resolve_config(o, err);
    if (o.seed) cfg.dataset_seed = *o.seed;
    require_file(o.out, "--out");
    const fs::path path(o.out);
    const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(parent)) {
        throw ConfigError("output directory '" + parent.string() + "' does not exist");
    }
    const trainer::DomainDataset ds = trainer::generate_dataset(cfg.dataset, cfg.dataset_seed);
    const json meta = {{"spec", to_json(cfg)["dataset"]}};
    save_dataset(path, ds, meta);
    out << ds.domains.size() << " domains x " << ds.num_classes << " classes\n";
    for (const auto& d : ds.domains) {
        std::vector<std::size_t> counts(ds.num_classes, 0);
        for (const auto& s : d.samples) ++counts[s.label];
        out << d.name << ":";
        for (std::size_t c : counts) out << " " << c;
        out << "\n";
    }
    return kExitOk;
}

int cmd_pretrain(const Options& o, const std::vector<std::string>& argv, std::ostream& out,
                 std::ostream& err) {
    RunConfig cfg = resolve_config(o, err);
    if (o.seed) cfg.pretrain.seed = *o.seed;
    const fs::path dir = prepare_out_dir(o.out);
    Manifest manifest(argv, cfg);
    Options no_base = o;
    no_base.base.clear();
    resolve_base(no_base, cfg, dir, manifest, out);
    manifest.write(dir / "manifest.json", {cfg.pretrain.seed});
    out << "wrote " << (dir / "base.ckpt").string() << "\n";
    return kExitOk;
}

int cmd_train(const Options& o, const std::vector<std::string>& argv, std::ostream& out,
              std::ostream& err) {
    RunConfig cfg = resolve_config(o, err);
    require_file(o.dataset, "--dataset");
    const trainer::DomainDataset ds = load_dataset(o.dataset);
    const fs::path dir = prepare_out_dir(o.out);
    if (o.test_domain >= ds.domains.size()) throw ConfigError("--test-domain out of range");
    Manifest manifest(argv, cfg);
    const vit::VitModel base = resolve_base(o, cfg, dir, manifest, out);

    const std::uint64_t seed = o.seed.value_or(cfg.seeds.front());
    trainer::DomainDataset sources{{}, ds.num_classes, ds.image_size};
    for (std::size_t d = 0; d < ds.domains.size(); ++d) {
        if (d != o.test_domain) sources.domains.push_back(ds.domains[d]);
    }
    const auto [train_split, val_split] =
        trainer::split_train_val(sources, cfg.train.val_fraction, seed);
    trainer::TrainConfig tc = cfg.train;
    tc.seed = seed;
    trainer::ProtocolAudit audit(o.test_domain);
    const trainer::TrainResult res = trainer::train(base, train_split, val_split, tc, &audit);
    const double acc = trainer::accuracy(res.merged, ds.domains[o.test_domain].samples);

    vit::save_model(dir / "pre_merge.ckpt", res.adapted);
    vit::save_model(dir / "merged.ckpt", res.merged);
    write_text_atomic(dir / "metrics.csv", trainer::history_csv(res.history));
    manifest.artifact("pre_merge", dir / "pre_merge.ckpt");
    manifest.artifact("merged", dir / "merged.ckpt");
    manifest.artifact("metrics", dir / "metrics.csv");
    manifest.write(dir / "manifest.json", {seed});
    out << "selected_iter " << res.selected_iter << " val_acc " << fixed(res.best_val_acc)
        << " test_domain " << ds.domains[o.test_domain].name << " accuracy " << fixed(acc) << "\n";
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
    require_file(o.checkpoint, "--checkpoint");
    require_file(o.dataset, "--dataset");
    if (o.domain.empty()) throw ConfigError("--domain is required");
    const vit::VitModel model = vit::load_model(o.checkpoint);
    const trainer::DomainDataset ds = load_dataset(o.dataset);
    const std::size_t d = resolve_domain(ds, o.domain);
    if (model.config.num_classes != ds.num_classes || model.config.image_size != ds.image_size) {
        throw ConfigError("checkpoint does not fit the dataset");
    }
    const double acc = trainer::accuracy(model, ds.domains[d].samples);
    out << "domain " << ds.domains[d].name << " accuracy " << trainer::format_number(acc) << "\n";
    return kExitOk;
}

trainer::RunOptions run_options(const Options& o, std::ostream& out) {
    trainer::RunOptions ro;
    if (o.jobs == 0) throw ConfigError("--jobs must be >= 1");
    ro.jobs = o.jobs;
    ro.on_run = [&out](const trainer::RunRecord& r) {
        out << "  run test_domain=" << r.test_domain << " seed=" << r.seed
            << " accuracy=" << fixed(r.accuracy) << "\n"
            << std::flush;
    };
    return ro;
}

int cmd_lodo(const Options& o, const std::vector<std::string>& argv, std::ostream& out,
             std::ostream& err) {
    const RunConfig cfg = resolve_config(o, err);
    require_file(o.dataset, "--dataset");
    const trainer::DomainDataset ds = load_dataset(o.dataset);
    const fs::path dir = prepare_out_dir(o.out);
    Manifest manifest(argv, cfg);
    const vit::VitModel base = resolve_base(o, cfg, dir, manifest, out);
    const auto seeds = resolve_seeds(o, cfg);
    const trainer::LodoResult r =
        trainer::leave_one_domain_out(ds, base, cfg.train, seeds, run_options(o, out));
    write_text_atomic(dir / "summary.csv", trainer::summary_csv(ds, r));
    manifest.artifact("summary", dir / "summary.csv");
    for (const auto& run : r.runs) {
        const std::string name =
            "history_d" + std::to_string(run.test_domain) + "_s" + std::to_string(run.seed) + ".csv";
        write_text_atomic(dir / name, trainer::history_csv(run.history));
    }
    manifest.write(dir / "manifest.json", seeds);
    print_lodo(out, "PEGO", r);
    return kExitOk;
}

int cmd_ablate(const Options& o, const std::vector<std::string>& argv, std::ostream& out,
               std::ostream& err) {
    const RunConfig cfg = resolve_config(o, err);
    require_file(o.dataset, "--dataset");
    const trainer::DomainDataset ds = load_dataset(o.dataset);
    const fs::path dir = prepare_out_dir(o.out);
    Manifest manifest(argv, cfg);
    const vit::VitModel base = resolve_base(o, cfg, dir, manifest, out);
    const auto seeds = resolve_seeds(o, cfg);
    const auto rows = trainer::ablate(ds, base, cfg.train, seeds, run_options(o, out));
    write_text_atomic(dir / "ablation.csv", trainer::ablation_csv(ds, rows));
    manifest.artifact("ablation", dir / "ablation.csv");
    manifest.write(dir / "manifest.json", seeds);
    for (const auto& row : rows) {
        const std::string label = row.method + " N=" + std::to_string(row.group_n) +
                                  " preserve=" + (row.preserve ? "1" : "0") +
                                  " diversify=" + (row.diversify ? "1" : "0");
        print_lodo(out, label, row.result);
    }
    return kExitOk;
}

int cmd_sweep(const Options& o, const std::vector<std::string>& argv, std::ostream& out,
              std::ostream& err) {
    const RunConfig cfg = resolve_config(o, err);
    require_file(o.dataset, "--dataset");
    const trainer::DomainDataset ds = load_dataset(o.dataset);
    const fs::path dir = prepare_out_dir(o.out);
    Manifest manifest(argv, cfg);
    const vit::VitModel base = resolve_base(o, cfg, dir, manifest, out);
    const auto seeds = resolve_seeds(o, cfg);
    const auto values = trainer::TrainConfig::group_n_search_space();
    const auto sweep = trainer::sweep_n(ds, base, cfg.train, values, seeds, run_options(o, out));
    write_text_atomic(dir / "sweep.csv", trainer::sweep_csv(sweep));
    manifest.artifact("sweep", dir / "sweep.csv");
    manifest.write(dir / "manifest.json", seeds);
    for (const auto& e : sweep.entries) {
        out << "N=" << e.group_n << " val " << fixed(e.result.mean_val_accuracy) << " test "
            << fixed(e.result.average) << "\n";
    }
    out << "selected N=" << sweep.best_n << "\n";
    return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
    const std::uint64_t seed = o.seed.value_or(1);
    const autograd::GradCheckProblem problem = autograd::make_gradcheck_problem(seed);
    autograd::BackwardOptions bo;
    bo.inject_l1_sign_bug = o.inject_sign_bug;
    bool ok = true;
    const std::pair<double, double> cases[] = {{0.0, autograd::kGradTolNoReg},
                                               {lora::kDefaultAlpha, autograd::kGradTolReg}};
    for (const auto& [alpha, tol] : cases) {
        numerics::Rng rng = numerics::Rng(seed).fork(7);
        const lora::LossWeights w{alpha, true, true};
        try {
            const auto rep = autograd::grad_check(problem.model, problem.batch, w, o.samples, rng, bo);
            const bool pass = rep.max_rel_error < tol;
            ok = ok && pass;
            out << "alpha " << alpha << " attempted " << rep.attempted << " accepted "
                << rep.accepted << " max_rel_error " << std::scientific << std::setprecision(3)
                << rep.max_rel_error << std::defaultfloat << " tol " << tol << " "
                << (pass ? "ok" : "FAILED") << "\n";
        } catch (const InconclusiveCheckError& e) {
            ok = false;
            out << "alpha " << alpha << " inconclusive: " << e.what() << "\n";
        }
    }
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_analyze(const Options& o, const std::vector<std::string>& argv, std::ostream& out,
                std::ostream& err) {
    require_file(o.checkpoint, "--checkpoint");
    const RunConfig cfg = resolve_config(o, err);
    const fs::path dir = prepare_out_dir(o.out);
    const vit::VitModel model = vit::load_model(o.checkpoint);
    if (!model.has_adapters()) {
        throw ConfigError("analyze needs a checkpoint that still carries its adapters");
    }
    const diagnostics::LayerRef ref = o.layer.empty() ? diagnostics::default_layer(model)
                                                      : diagnostics::parse_layer(o.layer, model);
    const lora::AdaptedLinear& layer = diagnostics::adapted_layer(model, ref);
    const std::size_t k = std::min({o.k, layer.out_dim(), layer.in_dim()});
    const diagnostics::PcReport rep =
        diagnostics::weight_pc_report(layer.base, layer.group.delta(), k);

    Manifest manifest(argv, cfg);
    write_text_atomic(dir / "pc_evr.csv", diagnostics::pc_evr_csv(rep));
    write_text_atomic(dir / "pc_cosine.csv", diagnostics::pc_cosine_csv(rep));
    manifest.artifact("pc_evr", dir / "pc_evr.csv");
    manifest.artifact("pc_cosine", dir / "pc_cosine.csv");

    if (!o.dataset.empty()) {
        const trainer::DomainDataset ds = load_dataset(o.dataset);
        std::vector<Sample> samples;
        for (const auto& d : ds.domains) {
            for (const auto& s : d.samples) samples.push_back(s);
        }
        if (samples.size() > o.max_samples) {
            // Evenly spaced subset so every domain stays represented.
            std::vector<Sample> sub;
            for (std::size_t i = 0; i < o.max_samples; ++i) {
                sub.push_back(samples[i * samples.size() / o.max_samples]);
            }
            samples = std::move(sub);
        }
        vit::VitModel pretrained = model;
        vit::strip_adapters(pretrained);
        const vit::VitModel merged = lora::merge_all(model);
        const auto proj =
            diagnostics::feature_projection({{"pretrained", &pretrained}, {"adapted", &merged}}, samples);
        write_text_atomic(dir / "feature_proj.csv", diagnostics::feature_proj_csv(proj));
        manifest.artifact("feature_proj", dir / "feature_proj.csv");
    }

    const std::string layer_name = std::to_string(ref.block) + "." + ref.proj;
    json report = {{"layer", layer_name},
                   {"k", k},
                   {"numerical_rank", rep.numerical_rank},
                   {"w_rank", rep.w_rank},
                   {"significance_threshold", diagnostics::kSignificance},
                   {"adapter_rank", model.adapter_shape().first},
                   {"group_n", model.adapter_shape().second}};
    write_text_atomic(dir / "report.json", report.dump(2) + "\n");
    manifest.artifact("report", dir / "report.json");
    manifest.write(dir / "manifest.json", {});

    double mean_cos = 0.0;
    for (double v : rep.pc_cosine.values()) mean_cos += v;
    if (rep.pc_cosine.size() > 0) mean_cos /= static_cast<double>(rep.pc_cosine.size());
    out << "layer " << layer_name << " numerical_rank " << rep.numerical_rank
        << " (sigma > " << diagnostics::kSignificance << " * sigma_1) mean_abs_cos "
        << fixed(mean_cos) << "\n";
    return kExitOk;
}

void add_training_flags(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--alpha", o.alpha, "orthogonality loss weight");
    sub->add_option("--rank", o.rank, "rank of every adapter");
    sub->add_option("--group-n", o.group_n, "adapters per projection");
    sub->add_option("--lr", o.lr, "Adam learning rate");
    sub->add_option("--iters", o.iters, "training iterations");
    sub->add_flag("--paper-iters", o.long_iters, "use the long 5000-iteration schedule");
    sub->add_option("--seed", o.seed, "seed (first seed for multi-seed runs)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv, argv + argc);
    Options o;
    CLI::App app{"Adapter-group fine-tuning of a compact vision transformer", "pego"};
    app.require_subcommand(1);
    app.set_version_flag("--version", PEGO_VERSION);

    auto* gen = app.add_subcommand("gen", "generate a synthetic multi-domain dataset");
    gen->add_option("--config", o.config, "JSON run configuration");
    gen->add_option("--seed", o.seed, "dataset seed");
    gen->add_option("--out", o.out, "output dataset file")->required();

    auto* pre = app.add_subcommand("pretrain", "train the frozen base model");
    add_training_flags(pre, o);
    pre->add_option("--out", o.out, "output directory")->required();

    auto* tr = app.add_subcommand("train", "train one adapted model");
    add_training_flags(tr, o);
    tr->add_option("--dataset", o.dataset, "dataset file")->required();
    tr->add_option("--out", o.out, "output directory")->required();
    tr->add_option("--base", o.base, "base checkpoint (pretrained on the fly when omitted)");
    tr->add_option("--test-domain", o.test_domain, "index of the held-out domain");

    auto* ev = app.add_subcommand("eval", "score a checkpoint on one domain");
    ev->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
    ev->add_option("--dataset", o.dataset, "dataset file")->required();
    ev->add_option("--domain", o.domain, "domain name or index")->required();

    std::vector<CLI::App*> multi;
    for (const auto& [name, help] :
         std::vector<std::pair<std::string, std::string>>{
             {"lodo", "leave-one-domain-out evaluation"},
             {"ablate", "loss-term ablation grid"},
             {"sweep", "group size selection by validation accuracy"}}) {
        auto* sub = app.add_subcommand(name, help);
        add_training_flags(sub, o);
        sub->add_option("--dataset", o.dataset, "dataset file")->required();
        sub->add_option("--out", o.out, "output directory")->required();
        sub->add_option("--base", o.base, "base checkpoint (pretrained on the fly when omitted)");
        sub->add_option("--jobs", o.jobs, "parallel runs");
        multi.push_back(sub);
    }

    auto* gc = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
    gc->add_option("--samples", o.samples, "probes per check");
    gc->add_option("--seed", o.seed, "problem seed");
    gc->add_flag("--inject-l1-sign-bug", o.inject_sign_bug)->group("");

    auto* an = app.add_subcommand("analyze", "weight and feature diagnostics");
    an->add_option("--checkpoint", o.checkpoint, "checkpoint with adapters")->required();
    an->add_option("--dataset", o.dataset, "dataset for the feature projection");
    an->add_option("--out", o.out, "output directory")->required();
    an->add_option("--layer", o.layer, "BLOCK.PROJ, default: last block wv");
    an->add_option("--k", o.k, "number of principal components");
    an->add_option("--max-samples", o.max_samples, "samples in the feature projection");
    an->add_option("--config", o.config, "JSON run configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_gen(o, out, err);
        if (pre->parsed()) return cmd_pretrain(o, args, out, err);
        if (tr->parsed()) return cmd_train(o, args, out, err);
        if (ev->parsed()) return cmd_eval(o, out);
        if (multi[0]->parsed()) return cmd_lodo(o, args, out, err);
        if (multi[1]->parsed()) return cmd_ablate(o, args, out, err);
        if (multi[2]->parsed()) return cmd_sweep(o, args, out, err);
        if (gc->parsed()) return cmd_gradcheck(o, out);
        if (an->parsed()) return cmd_analyze(o, args, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitConfig;
}

}  // namespace pego::cli
