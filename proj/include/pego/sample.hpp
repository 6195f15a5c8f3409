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
#include <vector>

#include "pego/numerics/matrix.hpp"

namespace pego {

// One labeled image. `domain` and `id` identify the sample for protocol
// audits; they never influence the numerics.
struct Sample {
    numerics::Matrix image;
    std::size_t label = 0;
    std::size_t domain = 0;
    std::size_t id = 0;
};

using Batch = std::vector<Sample>;

}  // namespace pego
