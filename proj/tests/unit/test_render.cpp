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

#include <cmath>
#include <cstdlib>
#include <cstring>

#include "dropfield/checkpoint.hpp"
#include "dropfield/render.hpp"
#include "dropfield/rng.hpp"
#include "test_util.hpp"

using namespace dropfield;

namespace {

FieldConfig tiny() {
  FieldConfig cfg;
  cfg.depth = 2;
  cfg.width = 8;
  cfg.skip_layer = std::nullopt;
  cfg.encoding = {2, 1};
  return cfg;
}

// relu density with a negative bias and no weights: sigma is exactly zero.
ad::ParamVector transparent(const FieldConfig& base, FieldConfig& cfg) {
  cfg = base;
  cfg.density = DensityActivation::relu;
  ad::ParamVector p = init_params(cfg, 1);
  for (double& x : p.slice(p.layout().find("sigma.weight"))) x = 0.0;
  p.slice(p.layout().find("sigma.bias"))[0] = -1.0;
  return p;
}

std::vector<Color> flat(int n, Color c) { return std::vector<Color>(static_cast<std::size_t>(n), c); }

}  // namespace

TEST_CASE("stratified samples sit at bin centers") {
  Ray r;
  r.t_near = 0.0;
  r.t_far = 1.0;
  const RaySamples s = stratified_sample(r, 4, false, 0, 0);
  CHECK(s.t_values == std::vector<double>{0.125, 0.375, 0.625, 0.875});
  CHECK(s.deltas == std::vector<double>{0.25, 0.25, 0.25, 0.125});
  r.t_near = 2.0;
  r.t_far = 5.0;
  const RaySamples one = stratified_sample(r, 1, false, 0, 0);
  CHECK(one.t_values == std::vector<double>{3.5});
  CHECK(one.deltas == std::vector<double>{1.5});
  CHECK_THROWS_AS(stratified_sample(r, 0, false, 0, 0), std::invalid_argument);
}

TEST_CASE("jittered samples stay in their bins and are keyed by ray id") {
  Ray r;
  r.t_near = 1.0;
  r.t_far = 3.0;
  for (std::uint64_t id = 0; id < 20; ++id) {
    const RaySamples s = stratified_sample(r, 16, true, 42, id);
    for (int i = 0; i < 16; ++i) {
      const double lo = 1.0 + i * 0.125;
      CHECK(s.t_values[i] >= lo);
      CHECK(s.t_values[i] < lo + 0.125);
    }
    for (double d : s.deltas) CHECK(d >= 0.0);
    CHECK(s.t_values == stratified_sample(r, 16, true, 42, id).t_values);
  }
  CHECK(stratified_sample(r, 16, true, 42, 1).t_values != stratified_sample(r, 16, true, 42, 2).t_values);
}

TEST_CASE("transparent samples composite to the background") {
  const RenderOutput out = composite(std::vector<double>(5, 0.0), flat(5, {0.2, 0.3, 0.4}),
                                     std::vector<double>(5, 0.1), {0.9, 0.8, 0.7});
  CHECK(out.color == Color{0.9, 0.8, 0.7});
  CHECK(out.final_transmittance == 1.0);
}

TEST_CASE("an opaque first sample takes its color") {
  std::vector<double> sigma{1e6, 3.0, 2.0};
  std::vector<Color> colors{{0.1, 0.6, 0.3}, {1, 1, 1}, {0, 0, 0}};
  const RenderOutput out = composite(sigma, colors, std::vector<double>{1.0, 0.5, 0.5}, {1, 1, 1});
  for (int c = 0; c < 3; ++c) CHECK(std::abs(out.color[c] - colors[0][c]) < 1e-9);
  CHECK(out.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("constant density transmittance matches the analytic integral") {
  Ray r;
  r.t_near = 0.0;
  r.t_far = 1.0;
  const RaySamples s = stratified_sample(r, 1024, false, 0, 0);
  // Bin-center samples cover [0.5/N, 1]; the first half bin carries no density.
  const RenderOutput out = composite(std::vector<double>(1024, 2.0), flat(1024, {0.5, 0.5, 0.5}),
                                     s.deltas, {1, 1, 1});
  CHECK(std::abs(out.final_transmittance - std::exp(-2.0)) < 1e-3);
}

TEST_CASE("weights sum with the final transmittance to one") {
  Stream rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    std::vector<double> sigma(n), delta(n);
    std::vector<Color> colors(n);
    for (int i = 0; i < n; ++i) {
      sigma[i] = rng.uniform() < 0.2 ? 0.0 : rng.uniform(0.0, 30.0);
      delta[i] = rng.uniform(0.0, 0.3);
      colors[i] = {rng.uniform(), rng.uniform(), rng.uniform()};
    }
    const Color bg{rng.uniform(), rng.uniform(), rng.uniform()};
    const RenderOutput out = composite(sigma, colors, delta, bg);
    double total = out.final_transmittance;
    for (double w : out.weights) {
      CHECK(w >= 0.0);
      total += w;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
    for (double c : out.color) {
      CHECK(c >= 0.0);
      CHECK(c <= 1.0 + 1e-12);
    }
    // Weights do not depend on the colors.
    const RenderOutput grey = composite(sigma, flat(n, {0.5, 0.5, 0.5}), delta, bg);
    CHECK(grey.weights == out.weights);
    // Raising one density never raises the final transmittance.
    std::vector<double> denser = sigma;
    denser[rng.below(static_cast<std::uint64_t>(n))] += 1.0;
    CHECK(composite(denser, colors, delta, bg).final_transmittance <= out.final_transmittance);
    // A zero-density sample changes nothing.
    std::vector<double> s2 = sigma, d2 = delta;
    std::vector<Color> c2 = colors;
    const std::size_t at = rng.below(static_cast<std::uint64_t>(n) + 1);
    s2.insert(s2.begin() + at, 0.0);
    d2.insert(d2.begin() + at, rng.uniform(0.0, 0.5));
    c2.insert(c2.begin() + at, Color{0.9, 0.1, 0.5});
    const RenderOutput padded = composite(s2, c2, d2, bg);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(padded.color[c] - out.color[c]) < 1e-12);
  }
}

TEST_CASE("composite rejects mismatched or negative input") {
  CHECK_THROWS_AS(composite(std::vector<double>{1.0}, flat(2, {0, 0, 0}), std::vector<double>{1.0},
                            {1, 1, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(composite(std::vector<double>{1.0}, flat(1, {0, 0, 0}), std::vector<double>{-1.0},
                            {1, 1, 1}),
                  std::invalid_argument);
}

TEST_CASE("traced compositing matches finite differences") {
  Stream rng(37);
  ad::ParamLayout layout;
  layout.add("sigma", 1, 12);
  layout.add("color", 3, 12);
  ad::ParamVector p(layout);
  for (double& x : p.slice(0)) x = rng.uniform(0.0, 4.0);
  for (double& x : p.slice(1)) x = rng.uniform(0.0, 1.0);
  ad::Matrix delta(1, 12);
  for (int i = 0; i < 12; ++i) delta(0, i) = rng.uniform(0.05, 0.3);
  auto f = [&](ad::Tape& t, const ad::ParamVector& q) {
    const TracedComposite c =
        composite(t.parameter(q, 0), t.parameter(q, 1), t.constant(delta), 4, {1.0, 0.9, 0.8});
    return ad::squared_norm(c.color - 0.3);
  };
  CHECK(ad::finite_difference_check(f, p, 1e-6) < 1e-6);
}

TEST_CASE("zero-density field renders the background") {
  FieldConfig cfg;
  const ad::ParamVector p = transparent(tiny(), cfg);
  RenderSettings settings;
  settings.samples = 16;
  settings.background = {0.2, 0.4, 0.6};
  Ray r;
  r.t_near = 1.0;
  r.t_far = 3.0;
  const RenderOutput out = render_ray(p, cfg, r, settings);
  CHECK(out.color == settings.background);
  const Image img = render_view(p, cfg, Intrinsics::from_fov(5, 4, 50.0), Pose{}, 1.0, 3.0, settings);
  for (int v = 0; v < 4; ++v)
    for (int u = 0; u < 5; ++u) CHECK(img.pixel(u, v) == settings.background);
}

TEST_CASE("render_ray evaluates the field once per sample") {
  const FieldConfig cfg = tiny();
  const ad::ParamVector p = init_params(cfg, 2);
  RenderSettings settings;
  settings.samples = 37;
  Ray r;
  r.t_near = 0.5;
  r.t_far = 2.0;
  const std::uint64_t before = field_point_evaluations();
  render_ray(p, cfg, r, settings);
  CHECK(field_point_evaluations() - before == 37);
}

TEST_CASE("64-sample quadrature agrees with a dense reference") {
  const FieldConfig cfg = tiny();
  const ad::ParamVector p = init_params(cfg, 6);
  Ray r;
  r.origin = Vec3(0.2, 0.1, 2.0);
  r.direction = Vec3(-0.1, 0.0, -1.0).normalized();
  r.t_near = 1.0;
  r.t_far = 3.0;
  RenderSettings coarse;
  coarse.samples = 64;
  RenderSettings dense = coarse;
  dense.samples = 640;
  const RenderOutput a = render_ray(p, cfg, r, coarse);
  const RenderOutput b = render_ray(p, cfg, r, dense);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(a.color[c] - b.color[c]) < 5e-2);
}

TEST_CASE("render_view uses half-pixel centered rays") {
  const FieldConfig cfg = tiny();
  const ad::ParamVector p = init_params(cfg, 3);
  const Intrinsics k = Intrinsics::from_fov(2, 2, 60.0);
  const Pose pose = look_at(Vec3(0, 0, 2), Vec3::Zero(), Vec3::UnitY());
  RenderSettings settings;
  settings.samples = 8;
  const std::uint64_t before = field_point_evaluations();
  const Image img = render_view(p, cfg, k, pose, 1.0, 3.0, settings);
  CHECK(field_point_evaluations() - before == 4 * 8);
  for (int v = 0; v < 2; ++v) {
    for (int u = 0; u < 2; ++u) {
      const RenderOutput ref = render_ray(p, cfg, pixel_to_ray(k, pose, u, v, 1.0, 3.0), settings);
      for (int c = 0; c < 3; ++c) CHECK(img.at(u, v, c) == doctest::Approx(ref.color[c]).epsilon(1e-14));
    }
  }
}

TEST_CASE("serial and parallel render_view agree bit for bit") {
  const FieldConfig cfg = tiny();
  const ad::ParamVector p = init_params(cfg, 4);
  const Intrinsics k = Intrinsics::from_fov(12, 9, 45.0);
  const Pose pose = look_at(Vec3(1, 1, 3), Vec3::Zero(), Vec3::UnitY());
  RenderSettings settings;
  settings.samples = 16;
  const Image a = render_view(p, cfg, k, pose, 1.0, 5.0, settings, Exec::serial);
  const Image b = render_view(p, cfg, k, pose, 1.0, 5.0, settings, Exec::parallel);
  CHECK(a.data == b.data);
}

TEST_CASE("stored checkpoint renders the stored golden image") {
  const std::filesystem::path dir = DROPFIELD_TEST_DATA;
  const Checkpoint ckpt = read_checkpoint(dir / "golden.ckpt");
  RenderSettings settings;
  settings.samples = ckpt.samples_per_ray;
  settings.background = ckpt.background;
  const Intrinsics k = Intrinsics::from_fov(16, 16, 40.0);
  const Pose pose = look_at(Vec3(2.0, 1.5, 3.0), Vec3::Zero(), Vec3::UnitY());
  const Image img = render_view(ckpt.params, ckpt.field, k, pose, 1.5, 6.5, settings);
  const std::string golden = testing::slurp(dir / "golden_render.bin");
  REQUIRE(golden.size() == img.data.size() * sizeof(double));
  double worst = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    double g;
    std::memcpy(&g, golden.data() + i * sizeof(double), sizeof(double));
    worst = std::max(worst, std::abs(g - img.data[i]));
  }
  CHECK(worst < 1e-9);
}
