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

#include "dropfield/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dropfield/rng.hpp"

namespace dropfield {

void TrainConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (batch_rays < 1) throw std::invalid_argument("batch_rays must be >= 1");
  if (!(lr_end > 0.0 && lr_end <= lr_start)) throw std::invalid_argument("need 0 < lr_end <= lr_start");
  if (samples_per_ray < 1) throw std::invalid_argument("samples_per_ray must be >= 1");
  if (chunk_rays < 1) throw std::invalid_argument("chunk_rays must be >= 1");
  if (log_every < 0 || checkpoint_every < 0) throw std::invalid_argument("intervals must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 &&
        adam.epsilon > 0.0)) {
    throw std::invalid_argument("Adam needs beta1, beta2 in [0, 1) and epsilon > 0");
  }
}

RayDataset build_ray_dataset(std::span<const Image> images, std::span<const BinaryMask> masks,
                             const Intrinsics& intr, std::span<const Pose> poses, double t_near,
                             double t_far) {
  intr.validate();
  if (images.size() != poses.size()) throw std::invalid_argument("one pose per image required");
  if (!masks.empty() && masks.size() != images.size()) {
    throw std::invalid_argument("one mask per image required");
  }
  RayDataset data;
  data.frames = static_cast<int>(images.size());
  std::ostringstream coverage;
  for (std::size_t f = 0; f < images.size(); ++f) {
    const Image& img = images[f];
    if (img.width != intr.width || img.height != intr.height) {
      throw std::invalid_argument("image " + std::to_string(f) + " does not match the intrinsics");
    }
    const BinaryMask* mask = masks.empty() ? nullptr : &masks[f];
    if (mask && (mask->width != img.width || mask->height != img.height)) {
      throw std::invalid_argument("mask " + std::to_string(f) + " does not match its image");
    }
    std::size_t masked = 0;
    for (int v = 0; v < img.height; ++v) {
      for (int u = 0; u < img.width; ++u) {
        if (mask && mask->at(u, v)) {
          ++masked;
          continue;
        }
        RayEntry e;
        e.ray = pixel_to_ray(intr, poses[f], u, v, t_near, t_far);
        e.target = img.pixel(u, v);
        e.frame = static_cast<int>(f);
        data.entries.push_back(e);
      }
    }
    coverage << " frame " << f << ": " << (100.0 * masked / img.pixel_count()) << "%";
  }
  if (data.entries.empty()) {
    throw ConfigError("every pixel is masked; nothing to train on (coverage:" + coverage.str() + ")");
  }
  return data;
}

double loss_mse(std::span<const Color> rendered, std::span<const Color> targets) {
  if (rendered.empty() || rendered.size() != targets.size()) {
    throw std::invalid_argument("loss_mse needs equal, non-empty batches");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double d = rendered[i][c] - targets[i][c];
      total += d * d;
    }
  }
  return total / static_cast<double>(rendered.size());
}

double lr_schedule(const TrainConfig& cfg, int iter) {
  if (iter < 0 || iter > cfg.iterations) throw std::invalid_argument("iteration outside the schedule");
  const double progress = static_cast<double>(iter) / cfg.iterations;
  return cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, progress);
}

TrainState TrainState::fresh(ad::ParamVector params) {
  TrainState s;
  s.first_moment = ad::ParamVector(params.layout());
  s.second_moment = ad::ParamVector(params.layout());
  s.params = std::move(params);
  return s;
}

void adam_step(TrainState& state, const ad::ParamVector& gradient, double lr, const AdamConfig& adam) {
  if (gradient.layout() != state.params.layout()) {
    throw std::invalid_argument("gradient layout does not match the parameters");
  }
  if (!gradient.all_finite()) {
    throw NumericalError("non-finite gradient at iteration " + std::to_string(state.iteration) +
                         " in slice '" + gradient.first_non_finite_slice() + "'");
  }
  const int t = state.iteration + 1;
  const double correct1 = 1.0 - std::pow(adam.beta1, t);
  const double correct2 = 1.0 - std::pow(adam.beta2, t);
  auto p = state.params.values();
  auto m = state.first_moment.values();
  auto v = state.second_moment.values();
  const auto g = gradient.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g[i];
    v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correct1;
    const double v_hat = v[i] / correct2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + adam.epsilon);
  }
  state.iteration = t;
}

namespace {

BatchResult chunk_loss_and_gradient(const ad::ParamVector& params, const FieldConfig& field,
                                    const RayDataset& data, std::span<const std::size_t> chunk,
                                    const RenderSettings& settings, std::uint64_t first_id,
                                    double normalizer) {
  std::vector<Ray> rays;
  std::vector<std::uint64_t> ids;
  ad::Matrix targets(3, static_cast<Eigen::Index>(chunk.size()));
  rays.reserve(chunk.size());
  ids.reserve(chunk.size());
  for (std::size_t k = 0; k < chunk.size(); ++k) {
    const RayEntry& e = data.entries.at(chunk[k]);
    rays.push_back(e.ray);
    ids.push_back(first_id + k);
    for (int c = 0; c < 3; ++c) targets(c, static_cast<Eigen::Index>(k)) = e.target[c];
  }
  ad::Tape tape;
  const FieldVars vars = bind_field(tape, params, field, true);
  const TracedRender tr = render_rays(tape, vars, field, rays, ids, settings);
  const ad::Var residual = tr.composite.color - tape.constant(std::move(targets));
  const ad::Var loss = ad::scale(ad::squared_norm(residual), 1.0 / normalizer);
  tape.backward(loss);
  BatchResult out;
  out.loss = loss.scalar();
  out.gradient = tape.parameter_gradient(params.layout());
  return out;
}

}  // namespace

BatchResult batch_loss_and_gradient(const ad::ParamVector& params, const FieldConfig& field,
                                    const RayDataset& data, std::span<const std::size_t> batch,
                                    const RenderSettings& settings, std::uint64_t stream_base,
                                    int chunk_rays, Exec exec) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (chunk_rays < 1) throw std::invalid_argument("chunk_rays must be >= 1");
  const std::size_t chunk = static_cast<std::size_t>(chunk_rays);
  const std::size_t chunks = (batch.size() + chunk - 1) / chunk;
  const double normalizer = static_cast<double>(batch.size());
  std::vector<BatchResult> parts(chunks);
  auto run = [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    const std::size_t count = std::min(chunk, batch.size() - begin);
    parts[c] = chunk_loss_and_gradient(params, field, data, batch.subspan(begin, count), settings,
                                       stream_base + begin, normalizer);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t c = 0; c < chunks; ++c) run(c);
  } else {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
  }
  BatchResult total;
  total.gradient = ad::ParamVector(params.layout());
  auto g = total.gradient.values();
  for (const BatchResult& part : parts) {
    total.loss += part.loss;
    const auto pg = part.gradient.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += pg[i];
  }
  return total;
}

BatchSampler::BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : size_(dataset_size), batch_(batch_size), seed_(seed), order_(dataset_size) {
  if (dataset_size == 0) throw std::invalid_argument("cannot sample from an empty dataset");
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (batch_ < size_) reshuffle();
}

void BatchSampler::reshuffle() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  Stream rng(seed_, 0xe90cu, epoch_++);
  for (std::size_t i = size_ - 1; i > 0; --i) {
    std::swap(order_[i], order_[rng.below(i + 1)]);
  }
  cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next() {
  if (batch_ >= size_) return order_;
  std::vector<std::size_t> out;
  out.reserve(batch_);
  while (out.size() < batch_) {
    if (cursor_ == size_) reshuffle();
    const std::size_t take = std::min(batch_ - out.size(), size_ - cursor_);
    out.insert(out.end(), order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
               order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + take));
    cursor_ += take;
  }
  return out;
}

TrainResult train(const RayDataset& data, const FieldConfig& field, const TrainConfig& cfg,
                  const TrainHooks& hooks, const ad::ParamVector* initial, Exec exec) {
  cfg.validate();
  field.validate();
  if (data.entries.empty()) throw std::invalid_argument("ray dataset is empty");
  TrainResult result;
  result.state = TrainState::fresh(initial ? *initial : init_params(field, cfg.seed));
  result.history.reserve(static_cast<std::size_t>(cfg.iterations));

  RenderSettings settings;
  settings.samples = cfg.samples_per_ray;
  settings.jitter = cfg.jitter;
  settings.seed = cfg.seed;
  settings.background = cfg.background;

  BatchSampler sampler(data.entries.size(), static_cast<std::size_t>(cfg.batch_rays), cfg.seed);
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::vector<std::size_t> batch = sampler.next();
    const std::uint64_t stream_base = static_cast<std::uint64_t>(it) * batch.size();
    const BatchResult br = batch_loss_and_gradient(result.state.params, field, data, batch, settings,
                                                   stream_base, cfg.chunk_rays, exec);
    if (!std::isfinite(br.loss)) {
      throw NumericalError("non-finite loss at iteration " + std::to_string(it));
    }
    const double lr = lr_schedule(cfg, it);
    adam_step(result.state, br.gradient, lr, cfg.adam);
    const LossRecord rec{it, lr, br.loss};
    result.history.push_back(rec);
    const int done = it + 1;
    if (hooks.progress && cfg.log_every > 0 && (done % cfg.log_every == 0 || it == 0)) {
      hooks.progress(rec);
    }
    if (hooks.checkpoint && cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0) {
      hooks.checkpoint(result.state);
    }
  }
  return result;
}

}  // namespace dropfield
