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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pego/trainer/dataset.hpp"
#include "pego/trainer/train.hpp"

namespace pego::cli {

// Everything a run needs besides the dataset file and the base checkpoint.
struct RunConfig {
    trainer::TrainConfig train = trainer::canonical_config();
    trainer::DatasetSpec dataset = trainer::canonical_dataset_spec();
    std::uint64_t dataset_seed = 0;
    trainer::PretrainConfig pretrain;
    std::vector<std::uint64_t> seeds{0, 1, 2};
};

// Unknown keys and wrongly typed values raise ConfigError. Missing keys keep
// their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
// Hex FNV-1a of the canonical JSON dump of the config.
std::string config_hash(const RunConfig& cfg);

// Human-readable notes for hyperparameters that differ from the reference
// defaults (alpha = 1e-3, rank = 4).
std::vector<std::string> default_deviation_warnings(const trainer::TrainConfig& cfg);

// Datasets share the checkpoint container: an "images" tensor with one
// flattened image per row plus "labels", "domains" and "ids" columns, and a
// record listing the domains.
void save_dataset(const std::filesystem::path& path, const trainer::DomainDataset& dataset,
                  const nlohmann::json& meta = nlohmann::json::object());
trainer::DomainDataset load_dataset(const std::filesystem::path& path);

// Text file written through a temporary and renamed into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace pego::cli
