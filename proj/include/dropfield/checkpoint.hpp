// Copyright 2026 The Dropfield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dropfield/autodiff.hpp"
#include "dropfield/field.hpp"
#include "dropfield/image.hpp"

namespace dropfield {

// Binary layout: "DFCKPT01", u32 header length, JSON header, u64 value
// count, then the parameters as little-endian f64 in layout order.
struct Checkpoint {
  FieldConfig field;
  ad::ParamVector params;
  int iteration = 0;
  std::uint64_t seed = 0;
  int samples_per_ray = 64;
  Color background{1.0, 1.0, 1.0};
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace dropfield
