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

#include "dropfield/masks.hpp"

#include <algorithm>
#include <stdexcept>

namespace dropfield {

void MaskConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("mask threshold must lie in (0, 1)");
  if (dilation_radius < 0) throw std::invalid_argument("dilation radius must be >= 0");
}

BinaryMask binarize(const AttentionMap& attention, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
  BinaryMask out(attention.width, attention.height);
  std::transform(attention.data.begin(), attention.data.end(), out.data.begin(),
                 [threshold](double a) { return static_cast<std::uint8_t>(a >= threshold); });
  return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("dilation radius must be >= 0");
  if (radius == 0) return mask;
  const int w = mask.width;
  const int h = mask.height;
  BinaryMask rows(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!mask.at(u, v)) continue;
      for (int x = std::max(0, u - radius); x <= std::min(w - 1, u + radius); ++x) rows.at(x, v) = 1;
    }
  }
  BinaryMask out(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!rows.at(u, v)) continue;
      for (int y = std::max(0, v - radius); y <= std::min(h - 1, v + radius); ++y) out.at(u, y) = 1;
    }
  }
  return out;
}

AttentionMap mean_attention(std::span<const AttentionMap> maps) {
  if (maps.empty()) throw std::invalid_argument("mean_attention needs at least one map");
  AttentionMap out(maps[0].width, maps[0].height);
  for (const AttentionMap& m : maps) {
    if (m.width != out.width || m.height != out.height) {
      throw std::invalid_argument("attention maps have different dimensions");
    }
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += m.data[i];
  }
  const double n = static_cast<double>(maps.size());
  for (double& v : out.data) v /= n;
  return out;
}

std::vector<BinaryMask> enhance_masks(std::span<const AttentionMap> maps, const MaskConfig& cfg) {
  cfg.validate();
  if (maps.empty()) throw std::invalid_argument("enhance_masks needs at least one map");
  BinaryMask shared;
  if (cfg.enhancement) shared = binarize(mean_attention(maps), cfg.threshold);
  std::vector<BinaryMask> out;
  out.reserve(maps.size());
  for (const AttentionMap& a : maps) {
    BinaryMask m = binarize(a, cfg.threshold);
    if (cfg.enhancement) {
      for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] |= shared.data[i];
    }
    out.push_back(dilate(m, cfg.dilation_radius));
  }
  return out;
}

MaskStats mask_stats(const BinaryMask& predicted, const BinaryMask& truth) {
  if (predicted.width != truth.width || predicted.height != truth.height) {
    throw std::invalid_argument("mask dimensions differ");
  }
  std::size_t both = 0, either = 0, set = 0, missed = 0;
  for (std::size_t i = 0; i < predicted.data.size(); ++i) {
    const bool p = predicted.data[i] != 0;
    const bool t = truth.data[i] != 0;
    both += p && t;
    either += p || t;
    set += p;
    missed += t && !p;
  }
  MaskStats s;
  s.coverage = predicted.pixel_count() ? static_cast<double>(set) / predicted.pixel_count() : 0.0;
  s.iou = either ? static_cast<double>(both) / either : 1.0;
  s.missed = missed;
  return s;
}

}  // namespace dropfield
