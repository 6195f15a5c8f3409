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

#include "pego/trainer/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "pego/errors.hpp"

namespace pego::trainer {

namespace {

// Runs tasks[0..n) on up to `jobs` threads. Each task writes only its own
// slot, so results do not depend on scheduling. The first failure (by task
// index) is rethrown after all workers finish.
void run_parallel(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

LodoResult summarize(const DomainDataset& dataset, std::vector<RunRecord> runs,
                     std::size_t num_seeds) {
    LodoResult out;
    const std::size_t nd = dataset.domains.size();
    std::vector<double> per_seed_avg(num_seeds, 0.0);
    double val_sum = 0.0;
    for (std::size_t d = 0; d < nd; ++d) {
        std::vector<double> accs;
        for (std::size_t s = 0; s < num_seeds; ++s) {
            const RunRecord& r = runs[d * num_seeds + s];
            accs.push_back(r.accuracy);
            per_seed_avg[s] += r.accuracy / static_cast<double>(nd);
            val_sum += r.val_accuracy;
        }
        const auto [m, se] = mean_stderr(accs);
        out.per_domain.push_back({dataset.domains[d].name, m, se});
        out.average += m / static_cast<double>(nd);
    }
    out.average_stderr = mean_stderr(per_seed_avg).second;
    out.mean_val_accuracy = val_sum / static_cast<double>(runs.size());
    out.runs = std::move(runs);
    return out;
}

}  // namespace

std::pair<double, double> mean_stderr(std::span<const double> xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

LodoResult leave_one_domain_out(const DomainDataset& dataset, const vit::VitModel& base,
                                const TrainConfig& cfg, std::span<const std::uint64_t> seeds,
                                const RunOptions& options) {
    if (dataset.domains.size() < 3) {
        throw ConfigError("leave_one_domain_out: need at least 3 domains");
    }
    if (seeds.empty()) throw ConfigError("leave_one_domain_out: need at least one seed");
    cfg.validate();
    const std::size_t nd = dataset.domains.size();
    const std::size_t ns = seeds.size();
    std::vector<RunRecord> runs(nd * ns);
    std::mutex callback_mutex;

    run_parallel(nd * ns, options.jobs, [&](std::size_t task) {
        const std::size_t test = task / ns;
        const std::uint64_t seed = seeds[task % ns];
        DomainDataset sources{{}, dataset.num_classes, dataset.image_size};
        for (std::size_t d = 0; d < nd; ++d)
            if (d != test) sources.domains.push_back(dataset.domains[d]);
        const auto [train_split, val_split] = split_train_val(sources, cfg.val_fraction, seed);

        TrainConfig run_cfg = cfg;
        run_cfg.seed = seed;
        ProtocolAudit audit(test);
        const TrainResult tr = train(base, train_split, val_split, run_cfg, &audit);

        RunRecord rec;
        rec.test_domain = test;
        rec.seed = seed;
        rec.accuracy = accuracy(tr.merged, dataset.domains[test].samples);
        rec.val_accuracy = tr.best_val_acc;
        rec.selected_iter = tr.selected_iter;
        rec.history = tr.history;
        rec.audited_samples = audit.samples_checked();
        rec.frozen_checks = audit.frozen_checks();
        runs[task] = rec;
        if (options.on_run || options.on_model) {
            std::lock_guard lock(callback_mutex);
            if (options.on_run) options.on_run(rec);
            if (options.on_model) options.on_model(rec, tr);
        }
    });
    return summarize(dataset, std::move(runs), ns);
}

std::vector<AblationRow> ablate(const DomainDataset& dataset, const vit::VitModel& base,
                                const TrainConfig& cfg, std::span<const std::uint64_t> seeds,
                                const RunOptions& options) {
    struct Variant {
        const char* method;
        bool preserve;
        bool diversify;
        bool single;
    };
    const Variant variants[] = {{"PEGO", true, true, false},
                                {"PEGO", true, false, false},
                                {"PEGO", false, true, false},
                                {"PEGO", false, false, false},
                                {"LoRA", false, false, true}};
    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        TrainConfig c = cfg;
        c.use_preserve = v.preserve;
        c.use_diversify = v.diversify;
        if (v.single) c.group_n = 1;
        rows.push_back({v.method, v.preserve, v.diversify, c.group_n,
                        leave_one_domain_out(dataset, base, c, seeds, options)});
    }
    return rows;
}

std::size_t select_by_validation(std::span<const std::pair<std::size_t, double>> candidates) {
    if (candidates.empty()) throw ConfigError("select_by_validation: no candidates");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const auto& [n, acc] = candidates[i];
        const auto& [bn, bacc] = candidates[best];
        if (acc > bacc || (acc == bacc && n < bn)) best = i;
    }
    return best;
}

SweepResult sweep_n(const DomainDataset& dataset, const vit::VitModel& base,
                    const TrainConfig& cfg, std::span<const std::size_t> values,
                    std::span<const std::uint64_t> seeds, const RunOptions& options) {
    if (values.empty()) throw ConfigError("sweep_n: no candidate group sizes");
    SweepResult out;
    std::vector<std::pair<std::size_t, double>> val_scores;
    for (std::size_t n : values) {
        TrainConfig c = cfg;
        c.group_n = n;
        out.entries.push_back({n, leave_one_domain_out(dataset, base, c, seeds, options)});
        val_scores.emplace_back(n, out.entries.back().result.mean_val_accuracy);
    }
    out.best_n = out.entries[select_by_validation(val_scores)].group_n;
    return out;
}

std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string history_csv(const std::vector<HistoryRow>& history) {
    std::string out = "iter,loss_cls,loss_preserve,loss_diversify,loss_or,val_acc\n";
    for (const auto& r : history) {
        out += std::to_string(r.iter) + ',' + format_number(r.loss_cls) + ',' +
               format_number(r.loss_preserve) + ',' + format_number(r.loss_diversify) + ',' +
               format_number(r.loss_or()) + ',' + (r.val_acc ? format_number(*r.val_acc) : "") +
               '\n';
    }
    return out;
}

std::string summary_csv(const DomainDataset& dataset, const LodoResult& result) {
    std::string out = "test_domain,seed,accuracy,selected_iter\n";
    for (const auto& r : result.runs) {
        out += dataset.domains[r.test_domain].name + ',' + std::to_string(r.seed) + ',' +
               format_number(r.accuracy) + ',' + std::to_string(r.selected_iter) + '\n';
    }
    return out;
}

std::string ablation_csv(const DomainDataset& dataset, const std::vector<AblationRow>& rows) {
    std::string out = "method,preserve,diversify,group_n";
    for (const auto& d : dataset.domains) out += ',' + d.name + "_mean," + d.name + "_stderr";
    out += ",avg_mean,avg_stderr\n";
    for (const auto& row : rows) {
        out += row.method + ',' + (row.preserve ? "1" : "0") + ',' + (row.diversify ? "1" : "0") +
               ',' + std::to_string(row.group_n);
        for (const auto& d : row.result.per_domain) {
            out += ',' + format_number(d.mean) + ',' + format_number(d.stderr_);
        }
        out += ',' + format_number(row.result.average) + ',' +
               format_number(row.result.average_stderr) + '\n';
    }
    return out;
}

std::string sweep_csv(const SweepResult& sweep) {
    std::string out = "group_n,mean_val_acc,mean_test_acc,selected\n";
    for (const auto& e : sweep.entries) {
        out += std::to_string(e.group_n) + ',' + format_number(e.result.mean_val_accuracy) + ',' +
               format_number(e.result.average) + ',' + (e.group_n == sweep.best_n ? "1" : "0") +
               '\n';
    }
    return out;
}

}  // namespace pego::trainer
