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

// Synthetic multi-view datasets with waterdrop degradation.
//
// The clean scene is a handful of Lambertian spheres over a checkered
// ground patch, rendered in closed form. Drops are ellipses that blend each
// covered pixel with the pixel mirrored through the drop center at half
// distance and add a brightness offset. In lens-fixed mode the ellipses live
// in pixel coordinates; in scene-fixed mode they sit on a world-space glass
// plane and are projected into every view.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dropfield/camera.hpp"
#include "dropfield/common.hpp"
#include "dropfield/image.hpp"

namespace dropfield {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Color color{0.5, 0.5, 0.5};
};

// Square patch y = height, |x|, |z| <= extent.
struct GroundPlane {
  double height = -0.5;
  Color color_a{0.9, 0.9, 0.85};
  Color color_b{0.3, 0.3, 0.35};
  double period = 0.5;
  double extent = 1.6;
};

struct SceneSpec {
  std::vector<Sphere> spheres;
  std::optional<GroundPlane> ground;
  Color background{1.0, 1.0, 1.0};
  Vec3 light_direction = Vec3(0.4, 0.8, 0.45).normalized();
  double ambient = 0.3;

  void validate() const;
  static SceneSpec desk_default();
};

enum class DropMode { lens_fixed, scene_fixed };

// center/radii are pixels in lens-fixed mode and glass-plane world units in
// scene-fixed mode.
struct Drop {
  double center_x = 0.0;
  double center_y = 0.0;
  double radius_x = 1.0;
  double radius_y = 1.0;
  double distortion = 1.0;  // blend weight s of the mirrored pixel
  double brightness = 0.0;
};

// Plane n . x = distance. In-plane axes: right = normalize(n x +y),
// up = right x n.
struct GlassPlane {
  Vec3 normal = Vec3(0.0, 0.0, 1.0);
  double distance = 3.0;
};

struct DropSpec {
  DropMode mode = DropMode::lens_fixed;
  std::vector<Drop> drops;
  GlassPlane glass;

  void validate() const;
};

struct DetectorSpec {
  int blur_radius = 1;
  double noise_amplitude = 0.05;
  double p_miss = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CameraRing {
  int views = 20;
  double radius = 4.0;
  double elevation_degrees = 25.0;
  double arc_degrees = 360.0;  // full circle: views evenly spaced, no duplicate
  double start_degrees = 0.0;

  void validate() const;
  std::vector<Pose> poses() const;  // look_at the origin with +y up
};

struct RandomDropSettings {
  int count = 7;
  double min_radius = 4.0;
  double max_radius = 7.0;
  double min_distortion = 0.7;
  double max_distortion = 1.0;
  double min_brightness = 0.1;
  double max_brightness = 0.3;
};

// Drops scattered uniformly over the image (lens-fixed) or over a square of
// side 2 * glass_extent on the glass plane (scene-fixed).
DropSpec random_drops(DropMode mode, const Intrinsics& intr, const RandomDropSettings& settings,
                      std::uint64_t seed, const GlassPlane& glass = {}, double glass_extent = 1.2);

Color trace_scene(const SceneSpec& scene, const Vec3& origin, const Vec3& direction);

Image render_clean(const SceneSpec& scene, const Intrinsics& intr, const Pose& pose);

struct DegradedFrame {
  Image degraded;
  BinaryMask truth;
};

DegradedFrame apply_drops(const Image& clean, const DropSpec& drops, const Intrinsics& intr,
                          const Pose& pose);

// Drops are the 8-connected components of `truth` in scan order. Each is
// omitted with probability p_miss from the stream keyed by
// (seed, frame, component); survivors are box-blurred (edge-replicated
// window of side 2r+1) and uniform noise in [-a, a] is added before clipping.
AttentionMap simulate_attention(const BinaryMask& truth, const DetectorSpec& det, int frame_index);

struct SynthSpec {
  SceneSpec scene;
  DropSpec drops;
  DetectorSpec detector;
  CameraRing ring;
  Intrinsics intrinsics = Intrinsics::from_fov(64, 64, 40.0);
  double t_near = 1.5;
  double t_far = 6.5;

  void validate() const;
};

struct SynthFrame {
  Pose pose;
  Image clean;
  Image degraded;
  BinaryMask truth;
  AttentionMap attention;
};

// Frames are independent; Exec::parallel generates them concurrently.
std::vector<SynthFrame> synthesize(const SynthSpec& spec, Exec exec = Exec::parallel);

// Writes the dataset layout under out_dir. manifest_extra is merged into
// manifest.json.
void write_dataset(const std::filesystem::path& out_dir, const SynthSpec& spec,
                   const std::vector<SynthFrame>& frames,
                   const nlohmann::json& manifest_extra = nlohmann::json::object());

// synthesize + write_dataset. Throws IoError if out_dir cannot be written.
std::vector<SynthFrame> generate_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                         Exec exec = Exec::parallel);

}  // namespace dropfield
