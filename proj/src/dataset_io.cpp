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

#include "dropfield/dataset_io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "dropfield/common.hpp"

namespace dropfield {

namespace fs = std::filesystem;
using nlohmann::json;

namespace layout {

std::string frame_name(const char* pattern, int frame) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, frame);
  return buf;
}

fs::path poses(const fs::path& dir) { return dir / "poses.json"; }
fs::path manifest(const fs::path& dir) { return dir / "manifest.json"; }
fs::path clean_image(const fs::path& dir, int f) { return dir / "images" / frame_name("clean_%04d.ppm", f); }
fs::path degraded_image(const fs::path& dir, int f) {
  return dir / "images" / frame_name("degraded_%04d.ppm", f);
}
fs::path attention_map(const fs::path& dir, int f) { return dir / "attention" / frame_name("att_%04d.pgm", f); }
fs::path truth_mask(const fs::path& dir, int f) { return dir / "masks" / frame_name("true_%04d.pgm", f); }
fs::path predicted_mask(const fs::path& dir, int f) { return dir / "masks" / frame_name("pred_%04d.pgm", f); }
fs::path rendered_image(const fs::path& dir, int f) { return dir / frame_name("render_%04d.ppm", f); }

}  // namespace layout

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_pose_file(const fs::path& path, const PoseFile& file) {
  json doc;
  doc["convention"] = "camera_to_world";
  doc["matrix_order"] = "row_major";
  doc["camera_axes"] = "x_right_y_up_z_backward";
  const Intrinsics& k = file.intrinsics;
  doc["intrinsics"] = {{"width", k.width}, {"height", k.height}, {"fx", k.fx},
                       {"fy", k.fy},       {"cx", k.cx},         {"cy", k.cy}};
  doc["t_near"] = file.t_near;
  doc["t_far"] = file.t_far;
  json frames = json::array();
  for (std::size_t i = 0; i < file.poses.size(); ++i) {
    const Pose& p = file.poses[i];
    json m = json::array();
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        if (r == 3) {
          m.push_back(c == 3 ? 1.0 : 0.0);
        } else {
          m.push_back(c == 3 ? p.translation[r] : p.rotation(r, c));
        }
      }
    }
    frames.push_back({{"index", i}, {"transform", m}});
  }
  doc["frames"] = frames;
  write_text_file(path, doc.dump(2) + "\n");
}

PoseFile read_pose_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("pose file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    auto expect = [&](const char* key, const char* value) {
      if (doc.at(key).get<std::string>() != value) {
        throw ConfigError(std::string("pose file: '") + key + "' must be \"" + value + "\"");
      }
    };
    expect("convention", "camera_to_world");
    expect("matrix_order", "row_major");
    expect("camera_axes", "x_right_y_up_z_backward");
    PoseFile file;
    const json& k = doc.at("intrinsics");
    file.intrinsics.width = k.at("width").get<int>();
    file.intrinsics.height = k.at("height").get<int>();
    file.intrinsics.fx = k.at("fx").get<double>();
    file.intrinsics.fy = k.at("fy").get<double>();
    file.intrinsics.cx = k.at("cx").get<double>();
    file.intrinsics.cy = k.at("cy").get<double>();
    file.intrinsics.validate();
    file.t_near = doc.at("t_near").get<double>();
    file.t_far = doc.at("t_far").get<double>();
    if (!(file.t_near >= 0.0 && file.t_near < file.t_far)) {
      throw ConfigError("pose file: need 0 <= t_near < t_far");
    }
    for (const json& f : doc.at("frames")) {
      const auto m = f.at("transform").get<std::vector<double>>();
      if (m.size() != 16) throw ConfigError("pose file: transforms need 16 entries");
      Pose p;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) p.rotation(r, c) = m[static_cast<std::size_t>(r * 4 + c)];
        p.translation[r] = m[static_cast<std::size_t>(r * 4 + 3)];
      }
      p.validate(1e-6);
      file.poses.push_back(p);
    }
    if (file.poses.empty()) throw ConfigError("pose file lists no frames");
    return file;
  } catch (const json::exception& e) {
    throw ConfigError("pose file '" + path.string() + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("pose file '" + path.string() + "': " + e.what());
  }
}

namespace {

template <typename T, typename Reader>
std::vector<T> load_frames(const fs::path& dir, int frames, fs::path (*path_of)(const fs::path&, int),
                           Reader read) {
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    const fs::path p = path_of(dir, f);
    if (!fs::exists(p)) {
      throw IoError("frame " + std::to_string(f) + ": missing file '" + p.string() + "'");
    }
    out.push_back(read(p));
  }
  return out;
}

}  // namespace

std::vector<Image> load_clean_images(const fs::path& dir, int frames) {
  return load_frames<Image>(dir, frames, layout::clean_image, read_ppm);
}

std::vector<Image> load_degraded_images(const fs::path& dir, int frames) {
  return load_frames<Image>(dir, frames, layout::degraded_image, read_ppm);
}

std::vector<AttentionMap> load_attention_maps(const fs::path& dir, int frames) {
  return load_frames<AttentionMap>(dir, frames, layout::attention_map, read_pgm);
}

std::vector<BinaryMask> load_truth_masks(const fs::path& dir, int frames) {
  return load_frames<BinaryMask>(dir, frames, layout::truth_mask, read_mask_pgm);
}

std::vector<BinaryMask> load_predicted_masks(const fs::path& dir, int frames) {
  return load_frames<BinaryMask>(dir, frames, layout::predicted_mask, read_mask_pgm);
}

}  // namespace dropfield
