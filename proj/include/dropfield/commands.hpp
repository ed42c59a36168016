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

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "dropfield/checkpoint.hpp"
#include "dropfield/config.hpp"

namespace dropfield {

struct SynthOutcome {
  int frames = 0;
  double mean_truth_coverage = 0.0;
};

// Refuses a non-empty out_dir unless force is set.
SynthOutcome cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir, bool force,
                       std::ostream& log, Exec exec = Exec::parallel);

struct MaskFrameReport {
  int frame = 0;
  double coverage = 0.0;
  std::optional<double> iou;  // present when truth masks exist
};

// Predicted masks for every frame of a dataset, without writing anything.
std::vector<BinaryMask> compute_masks(const std::filesystem::path& dataset_dir, const MaskConfig& cfg);

// Writes masks/pred_%04d.pgm and masks/report.csv.
std::vector<MaskFrameReport> cmd_mask(const std::filesystem::path& dataset_dir, const MaskConfig& cfg,
                                      std::ostream& log);

struct TrainOutcome {
  Checkpoint checkpoint;
  std::vector<LossRecord> history;
};

// Trains on the degraded images. masks empty means every pixel is used.
TrainOutcome train_run(const std::filesystem::path& dataset_dir, const std::vector<BinaryMask>& masks,
                       const RunConfig& cfg, const std::filesystem::path& run_dir, bool force,
                       std::ostream& log, Exec exec = Exec::parallel);

// Uses masks/pred_%04d.pgm unless unmasked is set. Writes run_dir/model.ckpt
// and run_dir/loss.csv.
TrainOutcome cmd_train(const std::filesystem::path& dataset_dir, const RunConfig& cfg,
                       const std::filesystem::path& run_dir, bool unmasked, bool force,
                       std::ostream& log, Exec exec = Exec::parallel);

// Renders every pose in the pose file to out_dir/render_%04d.ppm.
int cmd_render(const std::filesystem::path& checkpoint, const std::filesystem::path& poses,
               const std::filesystem::path& out_dir, bool force, std::ostream& log,
               Exec exec = Exec::parallel);

struct EvalRow {
  int frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> masked_psnr;  // inside the truth mask, when it is non-empty
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::optional<double> mean_masked_psnr;
};

// Compares rendered_dir/render_%04d.ppm with clean_dir/images/clean_%04d.ppm.
// When truth_dir is given, masks/true_%04d.pgm under it add masked PSNR.
EvalSummary cmd_eval(const std::filesystem::path& rendered_dir, const std::filesystem::path& clean_dir,
                     const std::optional<std::filesystem::path>& truth_dir,
                     const std::filesystem::path& csv_out, std::ostream& log);

struct AblationOutcome {
  EvalSummary enhanced;
  EvalSummary plain;
};

// Trains with enhancement on and off under out_dir/{enhance_on,enhance_off}
// and writes out_dir/ablation.csv.
AblationOutcome cmd_ablate(const std::filesystem::path& dataset_dir, const RunConfig& cfg,
                           const std::filesystem::path& out_dir, bool force, std::ostream& log,
                           Exec exec = Exec::parallel);

}  // namespace dropfield
