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

// On-disk dataset layout:
//
//   <dir>/poses.json                 intrinsics, ray bounds, camera-to-world matrices
//   <dir>/manifest.json              seed, config echo, frame count
//   <dir>/images/clean_%04d.ppm      P6, 8-bit
//   <dir>/images/degraded_%04d.ppm   P6, 8-bit
//   <dir>/attention/att_%04d.pgm     P5, 8-bit, value / 255
//   <dir>/masks/true_%04d.pgm        P5, 0 or 255
//   <dir>/masks/pred_%04d.pgm        P5, 0 or 255 (written by the mask step)

#include <filesystem>
#include <string>
#include <vector>

#include "dropfield/camera.hpp"
#include "dropfield/image.hpp"

namespace dropfield {

namespace layout {
std::filesystem::path poses(const std::filesystem::path& dir);
std::filesystem::path manifest(const std::filesystem::path& dir);
std::filesystem::path clean_image(const std::filesystem::path& dir, int frame);
std::filesystem::path degraded_image(const std::filesystem::path& dir, int frame);
std::filesystem::path attention_map(const std::filesystem::path& dir, int frame);
std::filesystem::path truth_mask(const std::filesystem::path& dir, int frame);
std::filesystem::path predicted_mask(const std::filesystem::path& dir, int frame);
// Rendered views live flat in their output directory.
std::filesystem::path rendered_image(const std::filesystem::path& dir, int frame);
std::string frame_name(const char* pattern, int frame);
}  // namespace layout

// poses.json:
// {
//   "convention": "camera_to_world",
//   "matrix_order": "row_major",
//   "camera_axes": "x_right_y_up_z_backward",
//   "intrinsics": {"width", "height", "fx", "fy", "cx", "cy"},
//   "t_near": ..., "t_far": ...,
//   "frames": [{"index": i, "transform": [16 numbers]}, ...]
// }
struct PoseFile {
  Intrinsics intrinsics;
  double t_near = 0.0;
  double t_far = 1.0;
  std::vector<Pose> poses;
};

void write_pose_file(const std::filesystem::path& path, const PoseFile& file);
// Throws IoError for unreadable files and ConfigError for schema problems,
// including convention strings other than the ones above.
PoseFile read_pose_file(const std::filesystem::path& path);

// Load every frame of one kind; a missing file throws IoError naming it.
std::vector<Image> load_clean_images(const std::filesystem::path& dir, int frames);
std::vector<Image> load_degraded_images(const std::filesystem::path& dir, int frames);
std::vector<AttentionMap> load_attention_maps(const std::filesystem::path& dir, int frames);
std::vector<BinaryMask> load_truth_masks(const std::filesystem::path& dir, int frames);
std::vector<BinaryMask> load_predicted_masks(const std::filesystem::path& dir, int frames);

// Creates `dir` (and parents); IoError on failure.
void ensure_directory(const std::filesystem::path& dir);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dropfield
