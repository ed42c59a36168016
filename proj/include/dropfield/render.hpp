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

// Discrete volume rendering along rays:
//   alpha_i = 1 - exp(-sigma_i delta_i)
//   T_i     = prod_{j<i} (1 - alpha_j) = exp(-sum_{j<i} sigma_j delta_j)
//   C       = sum_i T_i alpha_i c_i + T_{N+1} * background
// Samples sit in N equal bins over [t_n, t_f]; delta_i = t_{i+1} - t_i and
// the last delta runs to t_f.

#include <cstdint>
#include <span>
#include <vector>

#include "dropfield/autodiff.hpp"
#include "dropfield/camera.hpp"
#include "dropfield/common.hpp"
#include "dropfield/field.hpp"
#include "dropfield/image.hpp"

namespace dropfield {

struct RaySamples {
  std::vector<double> t_values;
  std::vector<Vec3> positions;
  std::vector<double> deltas;
};

// Bin centers without jitter, one uniform draw per bin with jitter. The draw
// comes from the stream keyed by (seed, ray_id), so results do not depend on
// evaluation order.
RaySamples stratified_sample(const Ray& ray, int samples, bool jitter, std::uint64_t seed,
                             std::uint64_t ray_id);

struct RenderOutput {
  Color color{};
  std::vector<double> weights;
  double final_transmittance = 1.0;
  double depth_estimate = 0.0;
};

struct TracedComposite {
  ad::Var color;                // 3 x rays
  ad::Var weights;              // 1 x (rays * samples)
  ad::Var final_transmittance;  // 1 x rays
};

// sigma, delta: 1 x (rays * samples); color: 3 x (rays * samples).
TracedComposite composite(ad::Var sigma, ad::Var color, ad::Var delta, Eigen::Index samples,
                          const Color& background);

RenderOutput composite(std::span<const double> sigmas, std::span<const Color> colors,
                       std::span<const double> deltas, const Color& background);

struct RenderSettings {
  int samples = 64;
  bool jitter = false;
  std::uint64_t seed = 0;
  Color background{1.0, 1.0, 1.0};
};

struct TracedRender {
  TracedComposite composite;
  ad::Matrix t_values;  // 1 x (rays * samples)
};

// Renders a bundle of rays on one tape; ray_ids key the jitter streams.
TracedRender render_rays(ad::Tape& tape, const FieldVars& vars, const FieldConfig& cfg,
                         std::span<const Ray> rays, std::span<const std::uint64_t> ray_ids,
                         const RenderSettings& settings);

RenderOutput render_ray(const ad::ParamVector& params, const FieldConfig& cfg, const Ray& ray,
                        const RenderSettings& settings, std::uint64_t ray_id = 0);

// Deterministic evaluation render (jitter forced off). Rows are independent
// work items; Exec::parallel spreads them over OpenMP threads.
Image render_view(const ad::ParamVector& params, const FieldConfig& cfg, const Intrinsics& intr,
                  const Pose& pose, double t_near, double t_far, const RenderSettings& settings,
                  Exec exec = Exec::parallel);

}  // namespace dropfield
