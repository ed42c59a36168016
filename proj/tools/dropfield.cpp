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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dropfield/commands.hpp"
#include "dropfield/dataset_io.hpp"

namespace fs = std::filesystem;
using namespace dropfield;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::string config;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Override the config seed");
  app->add_flag("--force", c.force, "Overwrite existing outputs");
  app->add_option("--config", c.config, "JSON run config")->check(CLI::ExistingFile);
}

RunConfig load(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

struct TrainFlags {
  std::optional<int> iterations;
  std::optional<int> batch_rays;
  std::optional<int> samples;
  std::optional<double> lr_start;
  std::optional<double> lr_end;
};

void add_train_flags(CLI::App* app, TrainFlags& t) {
  app->add_option("--iterations", t.iterations, "Optimizer steps");
  app->add_option("--batch-rays", t.batch_rays, "Rays per batch");
  app->add_option("--samples", t.samples, "Samples per ray");
  app->add_option("--lr-start", t.lr_start, "Initial learning rate");
  app->add_option("--lr-end", t.lr_end, "Final learning rate");
}

void apply(const TrainFlags& t, RunConfig& cfg) {
  if (t.iterations) cfg.train.iterations = *t.iterations;
  if (t.batch_rays) cfg.train.batch_rays = *t.batch_rays;
  if (t.samples) cfg.train.samples_per_ray = *t.samples;
  if (t.lr_start) cfg.train.lr_start = *t.lr_start;
  if (t.lr_end) cfg.train.lr_end = *t.lr_end;
}

fs::path or_default(const std::string& s, const fs::path& fallback) {
  return s.empty() ? fallback : fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Waterdrop-robust radiance fields at desk scale"};
  app.require_subcommand(1);
  bool serial = false;
  app.add_flag("--serial", serial, "Run the single-threaded reference paths");

  Common c_synth, c_mask, c_train, c_render, c_eval, c_ablate;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic waterdrop dataset");
  add_common(synth, c_synth);
  synth->add_option("--out", synth_out, "Dataset directory");

  std::string mask_dataset;
  std::optional<double> threshold;
  std::optional<int> dilate_radius;
  std::optional<bool> enhance;
  auto* mask = app.add_subcommand("mask", "Binarize attention maps into predicted masks");
  add_common(mask, c_mask);
  mask->add_option("--dataset", mask_dataset, "Dataset directory");
  mask->add_option("--threshold", threshold, "Attention threshold");
  mask->add_option("--dilate", dilate_radius, "Dilation radius in pixels");
  mask->add_option("--enhance", enhance, "Mean-attention enhancement (true/false)");

  std::string train_dataset, train_run_dir;
  bool unmasked = false;
  TrainFlags train_flags;
  auto* trainc = app.add_subcommand("train", "Train a radiance field on the degraded images");
  add_common(trainc, c_train);
  trainc->add_option("--dataset", train_dataset, "Dataset directory");
  trainc->add_option("--run", train_run_dir, "Run directory for checkpoint and loss.csv");
  trainc->add_flag("--unmasked", unmasked, "Train on every pixel, ignoring masks");
  add_train_flags(trainc, train_flags);

  std::string render_ckpt, render_poses, render_out;
  auto* render = app.add_subcommand("render", "Render every pose in a pose file");
  add_common(render, c_render);
  render->add_option("--checkpoint", render_ckpt, "Checkpoint file")->required();
  render->add_option("--poses", render_poses, "Pose file")->required();
  render->add_option("--out", render_out, "Output directory")->required();

  std::string eval_rendered, eval_clean, eval_truth, eval_csv;
  auto* evalc = app.add_subcommand("eval", "Score renders against clean images");
  add_common(evalc, c_eval);
  evalc->add_option("--rendered", eval_rendered, "Directory of render_%04d.ppm")->required();
  evalc->add_option("--clean", eval_clean, "Dataset directory holding images/clean_%04d.ppm")->required();
  evalc->add_option("--truth", eval_truth, "Dataset directory holding masks/true_%04d.pgm");
  evalc->add_option("--csv", eval_csv, "Metrics CSV path");

  std::string ablate_dataset, ablate_out;
  TrainFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "Compare training with and without mask enhancement");
  add_common(ablate, c_ablate);
  ablate->add_option("--dataset", ablate_dataset, "Dataset directory");
  ablate->add_option("--out", ablate_out, "Output directory");
  add_train_flags(ablate, ablate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const Exec exec = serial ? Exec::serial : Exec::parallel;
  try {
    if (*synth) {
      const RunConfig cfg = load(c_synth);
      cmd_synth(cfg, or_default(synth_out, cfg.output.dataset_dir), c_synth.force, std::cout, exec);
    } else if (*mask) {
      RunConfig cfg = load(c_mask);
      if (threshold) cfg.mask.threshold = *threshold;
      if (dilate_radius) cfg.mask.dilation_radius = *dilate_radius;
      if (enhance) cfg.mask.enhancement = *enhance;
      cfg.validate();
      cmd_mask(or_default(mask_dataset, cfg.output.dataset_dir), cfg.mask, std::cout);
    } else if (*trainc) {
      RunConfig cfg = load(c_train);
      apply(train_flags, cfg);
      cmd_train(or_default(train_dataset, cfg.output.dataset_dir), cfg,
                or_default(train_run_dir, cfg.output.run_dir), unmasked, c_train.force, std::cout, exec);
    } else if (*render) {
      cmd_render(render_ckpt, render_poses, render_out, c_render.force, std::cout, exec);
    } else if (*evalc) {
      const fs::path csv = eval_csv.empty() ? fs::path(eval_rendered) / "metrics.csv" : fs::path(eval_csv);
      std::optional<fs::path> truth;
      if (!eval_truth.empty()) truth = eval_truth;
      cmd_eval(eval_rendered, eval_clean, truth, csv, std::cout);
    } else if (*ablate) {
      RunConfig cfg = load(c_ablate);
      apply(ablate_flags, cfg);
      cmd_ablate(or_default(ablate_dataset, cfg.output.dataset_dir), cfg,
                 or_default(ablate_out, cfg.output.run_dir / "ablation"), c_ablate.force, std::cout, exec);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
