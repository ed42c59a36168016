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

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dropfield/autodiff.hpp"
#include "dropfield/camera.hpp"
#include "dropfield/common.hpp"
#include "dropfield/field.hpp"
#include "dropfield/image.hpp"
#include "dropfield/render.hpp"

namespace dropfield {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int iterations = 5000;
  int batch_rays = 512;
  double lr_start = 5e-4;
  double lr_end = 5e-5;
  int samples_per_ray = 64;
  bool jitter = true;
  Color background{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  AdamConfig adam;
  int log_every = 1000;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  // Rays per independent gradient chunk. Fixed, so the reduction order and
  // therefore the result do not depend on the thread count.
  int chunk_rays = 4;

  void validate() const;
};

struct RayEntry {
  Ray ray;
  Color target{};
  int frame = 0;
};

struct RayDataset {
  std::vector<RayEntry> entries;
  int frames = 0;
};

// One entry per pixel whose mask value is 0; targets come from `images`
// (the degraded captures). An empty `masks` span means no pixel is masked.
// Throws ConfigError, listing per-frame coverage, when every pixel is masked.
RayDataset build_ray_dataset(std::span<const Image> images, std::span<const BinaryMask> masks,
                             const Intrinsics& intr, std::span<const Pose> poses, double t_near,
                             double t_far);

// Mean over rays of the squared L2 distance across the three channels.
double loss_mse(std::span<const Color> rendered, std::span<const Color> targets);

// lr_start * (lr_end / lr_start)^(iter / iterations)
double lr_schedule(const TrainConfig& cfg, int iter);

struct TrainState {
  ad::ParamVector params;
  ad::ParamVector first_moment;
  ad::ParamVector second_moment;
  int iteration = 0;  // completed optimizer steps

  static TrainState fresh(ad::ParamVector params);
};

// One bias-corrected Adam update in place. Throws NumericalError naming the
// offending slice if the gradient is not finite.
void adam_step(TrainState& state, const ad::ParamVector& gradient, double lr, const AdamConfig& adam);

struct BatchResult {
  double loss = 0.0;
  ad::ParamVector gradient;
};

// Loss and gradient over entries[batch[k]]. Ray k draws its jitter from the
// stream keyed by (seed, stream_base + k). The batch is cut into chunks of
// chunk_rays; each chunk runs on its own tape and the chunk gradients are
// summed in chunk order.
BatchResult batch_loss_and_gradient(const ad::ParamVector& params, const FieldConfig& field,
                                    const RayDataset& data, std::span<const std::size_t> batch,
                                    const RenderSettings& settings, std::uint64_t stream_base,
                                    int chunk_rays, Exec exec = Exec::parallel);

// Epoch-shuffled sampling without replacement. When the batch is at least
// the dataset size every entry is used every iteration.
class BatchSampler {
 public:
  BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  void reshuffle();

  std::size_t size_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
};

struct LossRecord {
  int iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  TrainState state;
  std::vector<LossRecord> history;
};

struct TrainHooks {
  std::function<void(const LossRecord&)> progress;        // every log_every iterations
  std::function<void(const TrainState&)> checkpoint;      // every checkpoint_every iterations
};

// Starts from init_params(field, cfg.seed) unless `initial` is given.
TrainResult train(const RayDataset& data, const FieldConfig& field, const TrainConfig& cfg,
                  const TrainHooks& hooks = {}, const ad::ParamVector* initial = nullptr,
                  Exec exec = Exec::parallel);

}  // namespace dropfield
