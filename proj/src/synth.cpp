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

#include "dropfield/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include <Eigen/Geometry>

#include "dropfield/dataset_io.hpp"
#include "dropfield/rng.hpp"

namespace dropfield {

namespace {

bool unit_color(const Color& c) {
  return std::all_of(c.begin(), c.end(), [](double x) { return x >= 0.0 && x <= 1.0; });
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

// Orthonormal in-plane axes for the glass plane.
void plane_axes(const Vec3& n, Vec3& a, Vec3& b) {
  Vec3 hint(0.0, 1.0, 0.0);
  if (std::abs(n.dot(hint)) > 0.9) hint = Vec3(1.0, 0.0, 0.0);
  a = hint.cross(n).normalized();
  b = n.cross(a);
}

struct PixelDrop {
  double cx, cy, rx, ry, s, shift;
};

std::vector<PixelDrop> drops_in_view(const DropSpec& spec, const Intrinsics& intr, const Pose& pose) {
  std::vector<PixelDrop> out;
  if (spec.mode == DropMode::lens_fixed) {
    for (const Drop& d : spec.drops) {
      out.push_back({d.center_x, d.center_y, d.radius_x, d.radius_y, d.distortion, d.brightness});
    }
    return out;
  }
  const Vec3 n = spec.glass.normal.normalized();
  if (n.dot(pose.translation) <= spec.glass.distance) return out;
  Vec3 a, b;
  plane_axes(n, a, b);
  for (const Drop& d : spec.drops) {
    const Vec3 world = n * spec.glass.distance + d.center_x * a + d.center_y * b;
    double px, py, depth;
    if (!project(intr, pose, world, px, py, depth)) continue;
    out.push_back({px, py, d.radius_x * intr.fx / depth, d.radius_y * intr.fy / depth, d.distortion,
                   d.brightness});
  }
  return out;
}

bool inside(const PixelDrop& d, double x, double y) {
  const double dx = (x - d.cx) / d.rx;
  const double dy = (y - d.cy) / d.ry;
  return dx * dx + dy * dy <= 1.0;
}

int clamp_index(double x, int n) {
  return std::clamp(static_cast<int>(std::floor(x)), 0, n - 1);
}

// 8-connected component labels in raster order; -1 outside the mask.
std::vector<int> label_components(const BinaryMask& m, int& count) {
  std::vector<int> label(m.pixel_count(), -1);
  std::vector<std::pair<int, int>> stack;
  count = 0;
  for (int v = 0; v < m.height; ++v) {
    for (int u = 0; u < m.width; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * m.width + u;
      if (!m.data[idx] || label[idx] >= 0) continue;
      label[idx] = count;
      stack.emplace_back(u, v);
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx;
            const int ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height) continue;
            const std::size_t j = static_cast<std::size_t>(ny) * m.width + nx;
            if (m.data[j] && label[j] < 0) {
              label[j] = count;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      ++count;
    }
  }
  return label;
}

nlohmann::json color_json(const Color& c) { return {c[0], c[1], c[2]}; }

}  // namespace

void SceneSpec::validate() const {
  for (const Sphere& s : spheres) {
    if (!(s.radius > 0.0)) throw ConfigError("scene: sphere radius must be positive");
    if (!unit_color(s.color)) throw ConfigError("scene: sphere color outside [0,1]");
    if (!s.center.allFinite()) throw ConfigError("scene: sphere center must be finite");
  }
  if (ground) {
    if (!unit_color(ground->color_a) || !unit_color(ground->color_b)) {
      throw ConfigError("scene: ground colors outside [0,1]");
    }
    if (!(ground->period > 0.0)) throw ConfigError("scene: checker period must be positive");
    if (!(ground->extent > 0.0)) throw ConfigError("scene: ground extent must be positive");
  }
  if (!unit_color(background)) throw ConfigError("scene: background outside [0,1]");
  if (std::abs(light_direction.norm() - 1.0) > 1e-6) {
    throw ConfigError("scene: light_direction must be a unit vector");
  }
  if (!(ambient >= 0.0 && ambient <= 1.0)) throw ConfigError("scene: ambient outside [0,1]");
}

SceneSpec SceneSpec::desk_default() {
  SceneSpec s;
  s.spheres = {
      {Vec3(0.0, 0.05, 0.0), 0.55, {0.85, 0.25, 0.2}},
      {Vec3(0.85, -0.2, 0.45), 0.3, {0.2, 0.55, 0.85}},
      {Vec3(-0.75, -0.15, -0.5), 0.35, {0.3, 0.75, 0.3}},
  };
  s.ground = GroundPlane{};
  return s;
}

void DropSpec::validate() const {
  for (const Drop& d : drops) {
    if (!(d.radius_x > 0.0 && d.radius_y > 0.0)) throw ConfigError("drops: radii must be positive");
    if (!(d.distortion >= 0.0 && d.distortion <= 1.0)) {
      throw ConfigError("drops: distortion must lie in [0,1]");
    }
    if (!std::isfinite(d.center_x) || !std::isfinite(d.center_y) || !std::isfinite(d.brightness)) {
      throw ConfigError("drops: values must be finite");
    }
  }
  if (mode == DropMode::scene_fixed) {
    if (!(glass.normal.norm() > 0.0)) throw ConfigError("drops: glass normal must be nonzero");
    if (!std::isfinite(glass.distance)) throw ConfigError("drops: glass distance must be finite");
  }
}

void DetectorSpec::validate() const {
  if (blur_radius < 0) throw ConfigError("detector: blur_radius must be >= 0");
  if (!(noise_amplitude >= 0.0 && noise_amplitude <= 0.2)) {
    throw ConfigError("detector: noise_amplitude must lie in [0, 0.2]");
  }
  if (!(p_miss >= 0.0 && p_miss <= 1.0)) throw ConfigError("detector: p_miss must lie in [0,1]");
}

void CameraRing::validate() const {
  if (views < 2) throw ConfigError("camera_ring: need at least 2 views");
  if (!(radius > 0.0)) throw ConfigError("camera_ring: radius must be positive");
  if (!(std::abs(elevation_degrees) < 89.0)) {
    throw ConfigError("camera_ring: elevation must lie in (-89, 89) degrees");
  }
  if (!(arc_degrees > 0.0 && arc_degrees <= 360.0)) {
    throw ConfigError("camera_ring: arc must lie in (0, 360] degrees");
  }
}

std::vector<Pose> CameraRing::poses() const {
  validate();
  const double step = arc_degrees >= 360.0 ? 360.0 / views : arc_degrees / (views - 1);
  const double el = deg(elevation_degrees);
  std::vector<Pose> out;
  for (int i = 0; i < views; ++i) {
    const double az = deg(start_degrees + step * i);
    const Vec3 eye(radius * std::cos(el) * std::sin(az), radius * std::sin(el),
                   radius * std::cos(el) * std::cos(az));
    out.push_back(look_at(eye, Vec3::Zero(), Vec3(0.0, 1.0, 0.0)));
  }
  return out;
}

void SynthSpec::validate() const {
  scene.validate();
  drops.validate();
  detector.validate();
  ring.validate();
  try {
    intrinsics.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(t_near >= 0.0 && t_near < t_far)) throw ConfigError("synth: need 0 <= t_near < t_far");
}

DropSpec random_drops(DropMode mode, const Intrinsics& intr, const RandomDropSettings& settings,
                      std::uint64_t seed, const GlassPlane& glass, double glass_extent) {
  if (settings.count < 0) throw ConfigError("drops: count must be >= 0");
  if (!(settings.min_radius > 0.0 && settings.min_radius <= settings.max_radius)) {
    throw ConfigError("drops: need 0 < min_radius <= max_radius");
  }
  DropSpec spec;
  spec.mode = mode;
  spec.glass = glass;
  // Scene-fixed radii are the pixel radii seen from unit distance.
  const double scale = mode == DropMode::lens_fixed ? 1.0 : 1.0 / intr.fx;
  for (int k = 0; k < settings.count; ++k) {
    Stream rng(seed, 0xd509, static_cast<std::uint64_t>(k));
    Drop d;
    if (mode == DropMode::lens_fixed) {
      d.center_x = rng.uniform(0.0, intr.width);
      d.center_y = rng.uniform(0.0, intr.height);
    } else {
      d.center_x = rng.uniform(-glass_extent, glass_extent);
      d.center_y = rng.uniform(-glass_extent, glass_extent);
    }
    d.radius_x = scale * rng.uniform(settings.min_radius, settings.max_radius);
    d.radius_y = scale * rng.uniform(settings.min_radius, settings.max_radius);
    d.distortion = rng.uniform(settings.min_distortion, settings.max_distortion);
    d.brightness = rng.uniform(settings.min_brightness, settings.max_brightness);
    spec.drops.push_back(d);
  }
  spec.validate();
  return spec;
}

Color trace_scene(const SceneSpec& scene, const Vec3& origin, const Vec3& direction) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 normal = Vec3::Zero();
  Color albedo = scene.background;
  for (const Sphere& s : scene.spheres) {
    const Vec3 oc = origin - s.center;
    const double b = oc.dot(direction);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    double t = -b - root;
    if (t <= 1e-9) t = -b + root;
    if (t <= 1e-9 || t >= best) continue;
    best = t;
    normal = (origin + t * direction - s.center) / s.radius;
    albedo = s.color;
  }
  if (scene.ground && std::abs(direction.y()) > 1e-12) {
    const GroundPlane& g = *scene.ground;
    const double t = (g.height - origin.y()) / direction.y();
    if (t > 1e-9 && t < best) {
      const Vec3 p = origin + t * direction;
      if (std::abs(p.x()) <= g.extent && std::abs(p.z()) <= g.extent) {
        best = t;
        normal = direction.y() < 0.0 ? Vec3(0.0, 1.0, 0.0) : Vec3(0.0, -1.0, 0.0);
        const long cell = static_cast<long>(std::floor(p.x() / g.period)) +
                          static_cast<long>(std::floor(p.z() / g.period));
        albedo = (cell % 2 == 0) ? g.color_a : g.color_b;
      }
    }
  }
  if (!std::isfinite(best)) return scene.background;
  const double shade =
      scene.ambient + (1.0 - scene.ambient) * std::max(0.0, normal.dot(scene.light_direction));
  return {albedo[0] * shade, albedo[1] * shade, albedo[2] * shade};
}

Image render_clean(const SceneSpec& scene, const Intrinsics& intr, const Pose& pose) {
  intr.validate();
  Image img(intr.width, intr.height);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Ray r = pixel_to_ray(intr, pose, u, v, 0.0, 1.0);
      img.set(u, v, trace_scene(scene, r.origin, r.direction));
    }
  }
  return img;
}

DegradedFrame apply_drops(const Image& clean, const DropSpec& drops, const Intrinsics& intr,
                          const Pose& pose) {
  require(clean.width == intr.width && clean.height == intr.height,
          "apply_drops: image size does not match intrinsics");
  DegradedFrame out{clean, BinaryMask(clean.width, clean.height)};
  const std::vector<PixelDrop> view = drops_in_view(drops, intr, pose);
  for (int v = 0; v < clean.height; ++v) {
    for (int u = 0; u < clean.width; ++u) {
      const double x = u + 0.5;
      const double y = v + 0.5;
      // Later drops are drawn over earlier ones.
      for (auto it = view.rbegin(); it != view.rend(); ++it) {
        const PixelDrop& d = *it;
        if (!inside(d, x, y)) continue;
        const int su = clamp_index(d.cx - 0.5 * (x - d.cx), clean.width);
        const int sv = clamp_index(d.cy - 0.5 * (y - d.cy), clean.height);
        for (int c = 0; c < 3; ++c) {
          const double value =
              (1.0 - d.s) * clean.at(u, v, c) + d.s * clean.at(su, sv, c) + d.shift;
          out.degraded.at(u, v, c) = std::clamp(value, 0.0, 1.0);
        }
        out.truth.at(u, v) = 1;
        break;
      }
    }
  }
  return out;
}

AttentionMap simulate_attention(const BinaryMask& truth, const DetectorSpec& det, int frame_index) {
  det.validate();
  const int w = truth.width;
  const int h = truth.height;
  int components = 0;
  const std::vector<int> label = label_components(truth, components);
  std::vector<char> kept(static_cast<std::size_t>(components), 1);
  for (int k = 0; k < components; ++k) {
    Stream rng(det.seed, 0xa11e, static_cast<std::uint64_t>(frame_index), static_cast<std::uint64_t>(k));
    kept[static_cast<std::size_t>(k)] = rng.uniform() >= det.p_miss;
  }
  GrayImage base(w, h);
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] >= 0 && kept[static_cast<std::size_t>(label[i])]) base.data[i] = 1.0;
  }
  GrayImage out(w, h);
  const int r = det.blur_radius;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double sum = 0.0;
      int n = 0;
      for (int y = std::max(0, v - r); y <= std::min(h - 1, v + r); ++y) {
        for (int x = std::max(0, u - r); x <= std::min(w - 1, u + r); ++x) {
          sum += base.at(x, y);
          ++n;
        }
      }
      out.at(u, v) = sum / n;
    }
  }
  if (det.noise_amplitude > 0.0) {
    Stream noise(det.seed, 0x9015e, static_cast<std::uint64_t>(frame_index));
    for (double& a : out.data) a += noise.uniform(-det.noise_amplitude, det.noise_amplitude);
  }
  for (double& a : out.data) a = std::clamp(a, 0.0, 1.0);
  return out;
}

std::vector<SynthFrame> synthesize(const SynthSpec& spec, Exec exec) {
  spec.validate();
  const std::vector<Pose> poses = spec.ring.poses();
  std::vector<SynthFrame> frames(poses.size());
  const int n = static_cast<int>(poses.size());
  auto make = [&](int i) {
    SynthFrame& f = frames[static_cast<std::size_t>(i)];
    f.pose = poses[static_cast<std::size_t>(i)];
    f.clean = render_clean(spec.scene, spec.intrinsics, f.pose);
    DegradedFrame d = apply_drops(f.clean, spec.drops, spec.intrinsics, f.pose);
    f.degraded = std::move(d.degraded);
    f.truth = std::move(d.truth);
    f.attention = simulate_attention(f.truth, spec.detector, i);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) make(i);
  } else {
    for (int i = 0; i < n; ++i) make(i);
  }
  return frames;
}

void write_dataset(const std::filesystem::path& out_dir, const SynthSpec& spec,
                   const std::vector<SynthFrame>& frames, const nlohmann::json& manifest_extra) {
  ensure_directory(out_dir / "images");
  ensure_directory(out_dir / "attention");
  ensure_directory(out_dir / "masks");
  PoseFile pf{spec.intrinsics, spec.t_near, spec.t_far, {}};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const int f = static_cast<int>(i);
    write_ppm(layout::clean_image(out_dir, f), frames[i].clean);
    write_ppm(layout::degraded_image(out_dir, f), frames[i].degraded);
    write_pgm(layout::attention_map(out_dir, f), frames[i].attention);
    write_mask_pgm(layout::truth_mask(out_dir, f), frames[i].truth);
    pf.poses.push_back(frames[i].pose);
  }
  write_pose_file(layout::poses(out_dir), pf);
  nlohmann::json manifest = manifest_extra.is_object() ? manifest_extra : nlohmann::json::object();
  manifest["frame_count"] = frames.size();
  manifest["mode"] = spec.drops.mode == DropMode::lens_fixed ? "lens_fixed" : "scene_fixed";
  manifest["background"] = color_json(spec.scene.background);
  write_text_file(layout::manifest(out_dir), manifest.dump(2) + "\n");
}

std::vector<SynthFrame> generate_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                         Exec exec) {
  std::vector<SynthFrame> frames = synthesize(spec, exec);
  write_dataset(out_dir, spec, frames);
  return frames;
}

}  // namespace dropfield
