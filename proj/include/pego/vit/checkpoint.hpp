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
#include <vector>

#include <json.hpp>

#include "pego/vit/model.hpp"

namespace pego::vit {

// Binary container shared by model checkpoints and dataset files:
//
//   "PEGOCKPT"                 8-byte magic
//   u32 format_version         currently 1
//   u32 flags                  bit 0 set: payload values are f32, else f64
//   u64 record_length, bytes   JSON header record (config, kind, metadata)
//   u64 tensor_count
//   per tensor:
//     u64 name_length, bytes
//     u64 ndim, u64 dims[ndim]
//     values, row-major
//
// All integers and IEEE-754 values are little-endian.
inline constexpr std::uint32_t kFormatVersion = 1;

enum class Precision { f64, f32 };

struct NamedTensor {
    std::string name;
    Matrix value;
};

struct Container {
    nlohmann::json record = nlohmann::json::object();
    std::vector<NamedTensor> tensors;

    const Matrix& tensor(const std::string& name) const;
    bool has_tensor(const std::string& name) const;
};

std::string encode_container(const Container& c, Precision precision = Precision::f64);
Container decode_container(const std::string& bytes);

// Writes through a temporary file and renames it into place.
void write_container(const std::filesystem::path& path, const Container& c,
                     Precision precision = Precision::f64);
Container read_container(const std::filesystem::path& path);

nlohmann::json to_json(const VitConfig& cfg);
VitConfig vit_config_from_json(const nlohmann::json& j);

Container model_to_container(const VitModel& model);
// Rebuilds the model from the record and checks that the tensor set matches
// the declared architecture exactly.
VitModel model_from_container(const Container& c);

void save_model(const std::filesystem::path& path, const VitModel& model,
                Precision precision = Precision::f64);
VitModel load_model(const std::filesystem::path& path);

}  // namespace pego::vit
