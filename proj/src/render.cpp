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

#include "dropfield/render.hpp"

#include <stdexcept>

#include "dropfield/rng.hpp"

namespace dropfield {

RaySamples stratified_sample(const Ray& ray, int samples, bool jitter, std::uint64_t seed,
                             std::uint64_t ray_id) {
  if (samples < 1) throw std::invalid_argument("need at least one sample per ray");
  const double span = ray.t_far - ray.t_near;
  const double bin = span / samples;
  RaySamples out;
  out.t_values.resize(static_cast<std::size_t>(samples));
  Stream rng(seed, 0x5a3b1eu, ray_id);
  for (int i = 0; i < samples; ++i) {
    const double offset = jitter ? rng.uniform() : 0.5;
    out.t_values[static_cast<std::size_t>(i)] = ray.t_near + (i + offset) * bin;
  }
  out.positions.reserve(out.t_values.size());
  out.deltas.resize(out.t_values.size());
  for (std::size_t i = 0; i < out.t_values.size(); ++i) {
    out.positions.push_back(ray.at(out.t_values[i]));
    const double next = i + 1 < out.t_values.size() ? out.t_values[i + 1] : ray.t_far;
    out.deltas[i] = next - out.t_values[i];
  }
  return out;
}

TracedComposite composite(ad::Var sigma, ad::Var color, ad::Var delta, Eigen::Index samples,
                          const Color& background) {
  ad::Tape& tape = *sigma.tape();
  const ad::Var optical = sigma * delta;
  const ad::Var transmittance = ad::exp(-ad::segment_exclusive_cumsum(optical, samples));
  const ad::Var alpha = 1.0 - ad::exp(-optical);
  TracedComposite out;
  out.weights = transmittance * alpha;
  out.final_transmittance = ad::exp(-ad::segment_sum(optical, samples));
  const ad::Var bg = tape.constant(Eigen::Vector3d(background[0], background[1], background[2]));
  out.color = ad::segment_sum(out.weights * color, samples) + out.final_transmittance * bg;
  return out;
}

RenderOutput composite(std::span<const double> sigmas, std::span<const Color> colors,
                       std::span<const double> deltas, const Color& background) {
  const auto n = static_cast<Eigen::Index>(sigmas.size());
  if (n < 1 || colors.size() != sigmas.size() || deltas.size() != sigmas.size()) {
    throw std::invalid_argument("composite: sample counts differ");
  }
  ad::Matrix s(1, n), d(1, n), c(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(deltas[i] >= 0.0)) throw std::invalid_argument("composite: negative delta");
    s(0, i) = sigmas[i];
    d(0, i) = deltas[i];
    for (int k = 0; k < 3; ++k) c(k, i) = colors[i][k];
  }
  ad::Tape tape;
  const TracedComposite tc =
      composite(tape.constant(s), tape.constant(c), tape.constant(d), n, background);
  RenderOutput out;
  for (int k = 0; k < 3; ++k) out.color[k] = tc.color.value()(k, 0);
  out.weights.assign(tc.weights.value().data(), tc.weights.value().data() + n);
  out.final_transmittance = tc.final_transmittance.scalar();
  return out;
}

TracedRender render_rays(ad::Tape& tape, const FieldVars& vars, const FieldConfig& cfg,
                         std::span<const Ray> rays, std::span<const std::uint64_t> ray_ids,
                         const RenderSettings& settings) {
  if (ray_ids.size() != rays.size()) throw std::invalid_argument("one ray id per ray required");
  const Eigen::Index n = settings.samples;
  const auto lanes = static_cast<Eigen::Index>(rays.size()) * n;
  ad::Matrix points(3, lanes), dirs(3, static_cast<Eigen::Index>(rays.size())), deltas(1, lanes);
  TracedRender out;
  out.t_values.resize(1, lanes);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const RaySamples s = stratified_sample(rays[r], settings.samples, settings.jitter, settings.seed,
                                           ray_ids[r]);
    dirs.col(static_cast<Eigen::Index>(r)) = rays[r].direction;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index lane = static_cast<Eigen::Index>(r) * n + i;
      points.col(lane) = s.positions[static_cast<std::size_t>(i)];
      deltas(0, lane) = s.deltas[static_cast<std::size_t>(i)];
      out.t_values(0, lane) = s.t_values[static_cast<std::size_t>(i)];
    }
  }
  const TracedFieldOutput field =
      field_forward(vars, cfg, tape.constant(std::move(points)), tape.constant(std::move(dirs)), n);
  out.composite = composite(field.sigma, field.color, tape.constant(std::move(deltas)), n,
                            settings.background);
  return out;
}

RenderOutput render_ray(const ad::ParamVector& params, const FieldConfig& cfg, const Ray& ray,
                        const RenderSettings& settings, std::uint64_t ray_id) {
  ad::Tape tape;
  const FieldVars vars = bind_field(tape, params, cfg, false);
  const std::uint64_t ids[1] = {ray_id};
  const TracedRender tr = render_rays(tape, vars, cfg, std::span<const Ray>(&ray, 1), ids, settings);
  RenderOutput out;
  for (int k = 0; k < 3; ++k) out.color[k] = tr.composite.color.value()(k, 0);
  const ad::Matrix& w = tr.composite.weights.value();
  out.weights.assign(w.data(), w.data() + w.size());
  out.final_transmittance = tr.composite.final_transmittance.scalar();
  out.depth_estimate = (w.array() * tr.t_values.array()).sum();
  return out;
}

namespace {

void render_row(const ad::ParamVector& params, const FieldConfig& cfg, const Intrinsics& intr,
                const Pose& pose, double t_near, double t_far, const RenderSettings& settings,
                int v, Image& img) {
  std::vector<Ray> rays;
  std::vector<std::uint64_t> ids;
  rays.reserve(static_cast<std::size_t>(intr.width));
  for (int u = 0; u < intr.width; ++u) {
    rays.push_back(pixel_to_ray(intr, pose, u, v, t_near, t_far));
    ids.push_back(static_cast<std::uint64_t>(v) * intr.width + u);
  }
  ad::Tape tape;
  const FieldVars vars = bind_field(tape, params, cfg, false);
  const TracedRender tr = render_rays(tape, vars, cfg, rays, ids, settings);
  const ad::Matrix& c = tr.composite.color.value();
  for (int u = 0; u < intr.width; ++u) {
    img.set(u, v, {c(0, u), c(1, u), c(2, u)});
  }
}

}  // namespace

Image render_view(const ad::ParamVector& params, const FieldConfig& cfg, const Intrinsics& intr,
                  const Pose& pose, double t_near, double t_far, const RenderSettings& settings,
                  Exec exec) {
  intr.validate();
  RenderSettings eval = settings;
  eval.jitter = false;
  Image img(intr.width, intr.height);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int v = 0; v < intr.height; ++v) {
      render_row(params, cfg, intr, pose, t_near, t_far, eval, v, img);
    }
  } else {
    for (int v = 0; v < intr.height; ++v) {
      render_row(params, cfg, intr, pose, t_near, t_far, eval, v, img);
    }
  }
  return img;
}

}  // namespace dropfield
