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
#include <optional>
#include <string>

#include <json.hpp>

#include "dropfield/field.hpp"
#include "dropfield/masks.hpp"
#include "dropfield/synth.hpp"
#include "dropfield/trainer.hpp"

namespace dropfield {

struct DropConfig {
  DropMode mode = DropMode::lens_fixed;
  std::optional<RandomDropSettings> random = RandomDropSettings{};  // used when list is empty
  std::vector<Drop> list;
  GlassPlane glass;
  double glass_extent = 1.2;
};

struct OutputConfig {
  std::filesystem::path dataset_dir = "dataset";
  std::filesystem::path run_dir = "run";
};

struct RunConfig {
  std::uint64_t seed = 0;
  int width = 64;
  int height = 64;
  double hfov_degrees = 40.0;
  double t_near = 1.5;
  double t_far = 6.5;
  CameraRing ring;
  SceneSpec scene = SceneSpec::desk_default();
  DropConfig drops;
  DetectorSpec detector;
  MaskConfig mask;
  FieldConfig field;
  TrainConfig train;
  OutputConfig output;

  // Throws ConfigError on the first invalid value.
  void validate() const;
  // Resolved dataset description; random drops are drawn from seed.
  SynthSpec synth_spec() const;
  // Training settings with the run seed applied.
  TrainConfig train_config() const;
};

// Every key is optional; unknown keys at any level are rejected.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json to_json(const FieldConfig& cfg);
FieldConfig parse_field_config(const nlohmann::json& doc);

}  // namespace dropfield
