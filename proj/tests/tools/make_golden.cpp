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

// Regenerates tests/data/golden.ckpt and golden_render.bin, and prints the
// seed-0 field value used by test_field.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dropfield/commands.hpp"
#include "dropfield/render.hpp"

using namespace dropfield;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_golden <tests/data>\n";
    return 2;
  }
  const fs::path out = argv[1];
  const fs::path work = fs::temp_directory_path() / "dropfield_make_golden";
  fs::remove_all(work);

  RunConfig cfg = parse_run_config(nlohmann::json::parse(R"({
    "seed": 11,
    "image": {"width": 24, "height": 24},
    "camera_ring": {"views": 8},
    "drops": {"random": {"count": 2, "min_radius": 2, "max_radius": 3}},
    "field": {"depth": 3, "width": 16, "skip_layer": 1, "pos_frequencies": 4, "dir_frequencies": 2},
    "train": {"iterations": 150, "batch_rays": 64, "samples_per_ray": 24, "lr_start": 5e-3, "lr_end": 1e-3}
  })"));
  std::ostringstream log;
  cmd_synth(cfg, work / "data", true, log);
  const TrainOutcome t = train_run(work / "data", {}, cfg, work / "run", true, log);
  fs::create_directories(out);
  write_checkpoint(out / "golden.ckpt", t.checkpoint);

  const Checkpoint ckpt = read_checkpoint(out / "golden.ckpt");
  RenderSettings settings;
  settings.samples = ckpt.samples_per_ray;
  settings.background = ckpt.background;
  const Intrinsics k = Intrinsics::from_fov(16, 16, 40.0);
  const Pose pose = look_at(Vec3(2.0, 1.5, 3.0), Vec3::Zero(), Vec3::UnitY());
  const Image img = render_view(ckpt.params, ckpt.field, k, pose, 1.5, 6.5, settings, Exec::serial);
  std::ofstream bin(out / "golden_render.bin", std::ios::binary);
  bin.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size() * sizeof(double)));

  const FieldConfig field;
  const FieldOutput v = field_eval(init_params(field, 0), field, Vec3(0.3, -0.2, 0.5), Vec3(0.0, 0.6, -0.8));
  std::printf("sigma %a\nr %a\ng %a\nb %a\n", v.sigma, v.color[0], v.color[1], v.color[2]);
  fs::remove_all(work);
  return 0;
}
