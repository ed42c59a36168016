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

#include <doctest.h>

#include "dropfield/masks.hpp"
#include "dropfield/rng.hpp"

using namespace dropfield;

namespace {

AttentionMap constant_map(int w, int h, double v) { return AttentionMap(w, h, v); }

BinaryMask random_mask(Stream& rng, int w, int h, double p) {
  BinaryMask m(w, h);
  for (auto& x : m.data) x = rng.uniform() < p;
  return m;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] && !b.data[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("binarize thresholds with ties masked") {
  AttentionMap a(3, 1);
  a.data = {0.5, 0.1, 0.3};
  const BinaryMask m = binarize(a, 0.3);
  CHECK(m.data == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(binarize(constant_map(4, 4, 0.0), 0.3).count() == 0);
  CHECK_THROWS_AS(binarize(a, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(binarize(a, 1.0), std::invalid_argument);
}

TEST_CASE("binarize is monotone in the threshold") {
  Stream rng(1);
  AttentionMap a(16, 16);
  for (double& v : a.data) v = rng.uniform();
  for (double t = 0.05; t < 0.95; t += 0.05) CHECK(subset(binarize(a, t + 0.05), binarize(a, t)));
}

TEST_CASE("dilation examples") {
  BinaryMask m(9, 9);
  m.at(4, 4) = 1;
  CHECK(dilate(m, 0) == m);
  const BinaryMask d = dilate(m, 1);
  CHECK(d.count() == 9);
  for (int v = 3; v <= 5; ++v)
    for (int u = 3; u <= 5; ++u) CHECK(d.at(u, v) == 1);

  BinaryMask two(16, 9);
  two.at(3, 4) = 1;
  two.at(8, 4) = 1;
  const BinaryMask blocks = dilate(two, 2);
  CHECK(blocks.count() == 50);
  for (int v = 2; v <= 6; ++v) {
    for (int u = 1; u <= 5; ++u) CHECK(blocks.at(u, v) == 1);
    for (int u = 6; u <= 10; ++u) CHECK(blocks.at(u, v) == 1);
    CHECK(blocks.at(0, v) == 0);
    CHECK(blocks.at(11, v) == 0);
  }
  CHECK_THROWS_AS(dilate(m, -1), std::invalid_argument);
}

TEST_CASE("dilation clamps at the image border") {
  BinaryMask m(5, 5);
  m.at(0, 0) = 1;
  const BinaryMask d = dilate(m, 2);
  CHECK(d.count() == 9);
  CHECK(d.at(2, 2) == 1);
  CHECK(d.at(3, 0) == 0);
}

TEST_CASE("dilation is extensive, monotone and composes") {
  Stream rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const BinaryMask a = random_mask(rng, 12, 10, 0.05);
    BinaryMask b = a;
    for (auto& x : b.data) x |= rng.uniform() < 0.05;
    const int r1 = static_cast<int>(rng.below(3));
    const int r2 = static_cast<int>(rng.below(3));
    CHECK(subset(a, dilate(a, r1)));
    CHECK(subset(dilate(a, r1), dilate(b, r1)));
    CHECK(dilate(dilate(a, r1), r2) == dilate(a, r1 + r2));
  }
}

TEST_CASE("mean attention") {
  AttentionMap a = constant_map(2, 2, 0.2);
  AttentionMap b = constant_map(2, 2, 0.6);
  const std::vector<AttentionMap> one{a};
  CHECK(mean_attention(one).data == a.data);
  const std::vector<AttentionMap> pair{a, b};
  for (double v : mean_attention(pair).data) CHECK(v == doctest::Approx(0.4).epsilon(1e-15));
  const std::vector<AttentionMap> same(5, constant_map(3, 3, 0.7));
  for (double v : mean_attention(same).data) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
  const std::vector<AttentionMap> bad{a, constant_map(3, 2, 0.1)};
  CHECK_THROWS_AS(mean_attention(bad), std::invalid_argument);
  CHECK_THROWS_AS(mean_attention(std::vector<AttentionMap>{}), std::invalid_argument);
}

TEST_CASE("enhancement recovers a detection missed in one frame") {
  MaskConfig cfg;
  cfg.threshold = 0.4;
  cfg.dilation_radius = 0;
  std::vector<AttentionMap> maps{constant_map(1, 1, 0.1), constant_map(1, 1, 0.9)};
  const auto masks = enhance_masks(maps, cfg);
  CHECK(masks[0].at(0, 0) == 1);
  CHECK(masks[1].at(0, 0) == 1);
  cfg.enhancement = false;
  CHECK(enhance_masks(maps, cfg)[0].at(0, 0) == 0);
}

TEST_CASE("enhancement leaves pixels below threshold everywhere unmasked") {
  MaskConfig cfg;
  cfg.dilation_radius = 0;
  std::vector<AttentionMap> maps{constant_map(2, 2, 0.1), constant_map(2, 2, 0.2)};
  for (const BinaryMask& m : enhance_masks(maps, cfg)) CHECK(m.count() == 0);
}

TEST_CASE("drop visible in two of three frames is masked in all three") {
  MaskConfig cfg;
  cfg.threshold = 0.3;
  cfg.dilation_radius = 0;
  std::vector<AttentionMap> maps{constant_map(1, 1, 0.9), constant_map(1, 1, 0.9),
                                 constant_map(1, 1, 0.0)};
  for (const BinaryMask& m : enhance_masks(maps, cfg)) CHECK(m.at(0, 0) == 1);
}

TEST_CASE("dilation runs once after the OR") {
  MaskConfig cfg;
  cfg.threshold = 0.3;
  cfg.dilation_radius = 1;
  AttentionMap a(7, 7), b(7, 7);
  a.at(1, 1) = 1.0;
  b.at(1, 1) = 1.0;
  b.at(5, 5) = 1.0;  // mean 0.5 at (5,5)
  const std::vector<AttentionMap> maps{a, b};
  const auto masks = enhance_masks(maps, cfg);
  BinaryMask expect(7, 7);
  expect.at(1, 1) = 1;
  expect.at(5, 5) = 1;
  CHECK(masks[0] == dilate(expect, 1));
  CHECK(masks[1] == dilate(expect, 1));
}

TEST_CASE("enhanced masks contain the per-frame masks") {
  Stream rng(5);
  MaskConfig on;
  MaskConfig off;
  off.enhancement = false;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AttentionMap> maps;
    const int n = 1 + static_cast<int>(rng.below(5));
    for (int i = 0; i < n; ++i) {
      AttentionMap a(10, 8);
      for (double& v : a.data) v = rng.uniform();
      maps.push_back(a);
    }
    const auto e = enhance_masks(maps, on);
    const auto p = enhance_masks(maps, off);
    for (int i = 0; i < n; ++i) CHECK(subset(p[i], e[i]));
  }
}

TEST_CASE("mean of a repeated map binarizes like the map") {
  Stream rng(6);
  AttentionMap a(9, 9);
  for (double& v : a.data) v = rng.uniform();
  const std::vector<AttentionMap> reps(4, a);
  for (double t : {0.1, 0.3, 0.5, 0.9}) CHECK(binarize(mean_attention(reps), t) == binarize(a, t));
}

TEST_CASE("mask statistics") {
  BinaryMask truth(4, 4);
  truth.at(0, 0) = truth.at(1, 0) = 1;
  CHECK(mask_stats(truth, truth).iou == 1.0);
  BinaryMask other(4, 4);
  other.at(3, 3) = 1;
  const MaskStats disjoint = mask_stats(other, truth);
  CHECK(disjoint.iou == 0.0);
  CHECK(disjoint.missed == 2);
  BinaryMask bigger = truth;
  bigger.at(0, 1) = bigger.at(1, 1) = 1;
  const MaskStats s = mask_stats(bigger, truth);
  CHECK(s.iou == 0.5);
  CHECK(s.coverage == 4.0 / 16.0);
  CHECK(s.missed == 0);
  CHECK(mask_stats(BinaryMask(2, 2), BinaryMask(2, 2)).iou == 1.0);
  CHECK_THROWS_AS(mask_stats(BinaryMask(2, 2), BinaryMask(3, 2)), std::invalid_argument);
}

TEST_CASE("mask config validation") {
  MaskConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.threshold = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = MaskConfig{};
  cfg.dilation_radius = -1;
  CHECK_THROWS(cfg.validate());
}
