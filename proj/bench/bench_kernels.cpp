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


#include <benchmark/benchmark.h>

#include <cmath>
#include <numeric>

#include "dropfield/metrics.hpp"
#include "dropfield/render.hpp"
#include "dropfield/synth.hpp"
#include "dropfield/trainer.hpp"

using namespace dropfield;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

FieldConfig bench_field() { return FieldConfig{}; }

void BM_RenderView(benchmark::State& state) {
  const FieldConfig cfg = bench_field();
  const ad::ParamVector p = init_params(cfg, 1);
  const Intrinsics k = Intrinsics::from_fov(32, 32, 40.0);
  const Pose pose = look_at(Vec3(2.0, 1.5, 3.0), Vec3::Zero(), Vec3::UnitY());
  RenderSettings settings;
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_view(p, cfg, k, pose, 1.5, 6.5, settings, exec_of(state)));
  }
}

void BM_BatchGradient(benchmark::State& state) {
  const FieldConfig cfg = bench_field();
  const ad::ParamVector p = init_params(cfg, 1);
  const Intrinsics k = Intrinsics::from_fov(32, 32, 40.0);
  CameraRing ring;
  ring.views = 4;
  const std::vector<Pose> poses = ring.poses();
  const std::vector<Image> images(poses.size(), Image(32, 32, 0.5));
  const RayDataset data = build_ray_dataset(images, {}, k, poses, 1.5, 6.5);
  std::vector<std::size_t> batch(512);
  std::iota(batch.begin(), batch.end(), std::size_t{0});
  RenderSettings settings;
  settings.jitter = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_loss_and_gradient(p, cfg, data, batch, settings, 0, 4, exec_of(state)));
  }
}

void BM_Ssim(benchmark::State& state) {
  Image a(256, 256), b(256, 256);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = 0.5 + 0.5 * std::sin(0.01 * static_cast<double>(i));
    b.data[i] = 0.5 + 0.45 * std::sin(0.011 * static_cast<double>(i));
  }
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b, exec_of(state)));
}

}  // namespace

// Argument 0 is the serial reference, 1 the OpenMP kernel.
BENCHMARK(BM_RenderView)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ssim)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
