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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pego/trainer/train.hpp"

namespace pego::trainer {

struct RunRecord {
    std::size_t test_domain = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;      // on the untouched held-out domain
    double val_accuracy = 0.0;  // best training-domain validation accuracy
    std::size_t selected_iter = 0;
    std::vector<HistoryRow> history;
    std::size_t audited_samples = 0;
    std::size_t frozen_checks = 0;
};

struct DomainSummary {
    std::string name;
    double mean = 0.0;
    double stderr_ = 0.0;
};

// One method evaluated leave-one-domain-out over several seeds.
struct LodoResult {
    std::vector<RunRecord> runs;  // ordered by (test_domain, seed index)
    std::vector<DomainSummary> per_domain;
    double average = 0.0;           // mean of the per-domain means
    double average_stderr = 0.0;    // stderr over seeds of the per-seed averages
    double mean_val_accuracy = 0.0; // over all runs; used for model selection
};

struct RunOptions {
    std::size_t jobs = 1;
    // Called once per finished run (from the worker thread).
    std::function<void(const RunRecord&)> on_run;
    // When set, every trained (adapted) model is handed over as well.
    std::function<void(const RunRecord&, const TrainResult&)> on_model;
};

// Sample mean and standard error (sample std / sqrt(n), 0 for n == 1).
std::pair<double, double> mean_stderr(std::span<const double> xs);

// For every held-out domain and seed: split the remaining domains into
// train/val, train, and score the merged model on the held-out domain.
LodoResult leave_one_domain_out(const DomainDataset& dataset, const vit::VitModel& base,
                                const TrainConfig& cfg, std::span<const std::uint64_t> seeds,
                                const RunOptions& options = {});

struct AblationRow {
    std::string method;
    bool preserve = false;
    bool diversify = false;
    std::size_t group_n = 0;
    LodoResult result;
};

// The 2x2 grid over {preserve, diversify} with cfg.group_n adapters, plus a
// single-adapter reference row without regularization.
std::vector<AblationRow> ablate(const DomainDataset& dataset, const vit::VitModel& base,
                                const TrainConfig& cfg, std::span<const std::uint64_t> seeds,
                                const RunOptions& options = {});

struct SweepEntry {
    std::size_t group_n = 0;
    LodoResult result;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    std::size_t best_n = 0;
};

// Index of the candidate with the highest validation accuracy; ties go to
// the smaller group size. Only validation numbers are visible here.
std::size_t select_by_validation(std::span<const std::pair<std::size_t, double>> candidates);

SweepResult sweep_n(const DomainDataset& dataset, const vit::VitModel& base,
                    const TrainConfig& cfg, std::span<const std::size_t> values,
                    std::span<const std::uint64_t> seeds, const RunOptions& options = {});

// CSV exports. Numbers use the shortest round-trip representation with '.'
// as decimal separator; lines end in LF.
std::string format_number(double x);
std::string history_csv(const std::vector<HistoryRow>& history);
std::string summary_csv(const DomainDataset& dataset, const LodoResult& result);
std::string ablation_csv(const DomainDataset& dataset, const std::vector<AblationRow>& rows);
std::string sweep_csv(const SweepResult& sweep);

}  // namespace pego::trainer
