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

#include "dropfield/commands.hpp"

#include <cstdio>
#include <sstream>

#include "dropfield/dataset_io.hpp"
#include "dropfield/metrics.hpp"
#include "dropfield/render.hpp"

namespace dropfield {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

bool non_empty_dir(const fs::path& dir) {
  return fs::is_directory(dir) && fs::directory_iterator(dir) != fs::directory_iterator();
}

void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir)) {
    throw IoError("'" + dir.string() + "' exists and is not a directory");
  }
  if (non_empty_dir(dir) && !force) {
    throw ConfigError("output directory '" + dir.string() + "' is not empty (use --force to overwrite)");
  }
  ensure_directory(dir);
}

int frame_count(const fs::path& dataset_dir) {
  const fs::path p = layout::poses(dataset_dir);
  if (!fs::exists(p)) throw IoError("dataset '" + dataset_dir.string() + "' has no poses.json");
  return static_cast<int>(read_pose_file(p).poses.size());
}

bool has_truth_masks(const fs::path& dir, int frames) {
  for (int f = 0; f < frames; ++f) {
    if (!fs::exists(layout::truth_mask(dir, f))) return false;
  }
  return frames > 0;
}

void print_eval(const EvalSummary& s, std::ostream& log) {
  log << "mean PSNR " << fmt("%.4f", s.mean_psnr) << " dB, mean SSIM " << fmt("%.4f", s.mean_ssim);
  if (s.mean_masked_psnr) log << ", mean masked PSNR " << fmt("%.4f", *s.mean_masked_psnr) << " dB";
  log << "\n";
}

}  // namespace

SynthOutcome cmd_synth(const RunConfig& cfg, const fs::path& out_dir, bool force, std::ostream& log,
                       Exec exec) {
  cfg.validate();
  const SynthSpec spec = cfg.synth_spec();
  prepare_dir(out_dir, force);
  if (force) {
    for (const char* sub : {"images", "attention", "masks"}) fs::remove_all(out_dir / sub);
    fs::remove(layout::poses(out_dir));
    fs::remove(layout::manifest(out_dir));
  }
  const std::vector<SynthFrame> frames = synthesize(spec, exec);
  const nlohmann::json extra = {{"seed", cfg.seed}, {"config", to_json(cfg)}};
  write_dataset(out_dir, spec, frames, extra);
  SynthOutcome out;
  out.frames = static_cast<int>(frames.size());
  for (const SynthFrame& f : frames) {
    out.mean_truth_coverage += static_cast<double>(f.truth.count()) / f.truth.pixel_count();
  }
  out.mean_truth_coverage /= out.frames;
  log << "wrote " << out.frames << " frames to " << out_dir.string() << " (mean drop coverage "
      << fmt("%.2f", 100.0 * out.mean_truth_coverage) << "%)\n";
  return out;
}

std::vector<BinaryMask> compute_masks(const fs::path& dataset_dir, const MaskConfig& cfg) {
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const int frames = frame_count(dataset_dir);
  if (!fs::is_directory(dataset_dir / "attention")) {
    throw IoError("dataset '" + dataset_dir.string() +
                  "' has no attention/ directory; attention maps are required to build masks");
  }
  const std::vector<AttentionMap> maps = load_attention_maps(dataset_dir, frames);
  return enhance_masks(maps, cfg);
}

std::vector<MaskFrameReport> cmd_mask(const fs::path& dataset_dir, const MaskConfig& cfg,
                                      std::ostream& log) {
  const std::vector<BinaryMask> masks = compute_masks(dataset_dir, cfg);
  const int frames = static_cast<int>(masks.size());
  std::vector<BinaryMask> truth;
  if (has_truth_masks(dataset_dir, frames)) truth = load_truth_masks(dataset_dir, frames);
  ensure_directory(dataset_dir / "masks");
  std::ostringstream csv;
  csv << "frame,coverage,iou\n";
  std::vector<MaskFrameReport> report;
  for (int f = 0; f < frames; ++f) {
    const BinaryMask& m = masks[static_cast<std::size_t>(f)];
    write_mask_pgm(layout::predicted_mask(dataset_dir, f), m);
    MaskFrameReport r;
    r.frame = f;
    r.coverage = static_cast<double>(m.count()) / m.pixel_count();
    if (!truth.empty()) r.iou = mask_stats(m, truth[static_cast<std::size_t>(f)]).iou;
    csv << f << "," << fmt("%.6f", r.coverage) << "," << (r.iou ? fmt("%.6f", *r.iou) : "") << "\n";
    log << "frame " << f << ": coverage " << fmt("%.2f", 100.0 * r.coverage) << "%";
    if (r.iou) log << ", IoU " << fmt("%.4f", *r.iou);
    log << "\n";
    report.push_back(r);
  }
  write_text_file(dataset_dir / "masks" / "report.csv", csv.str());
  return report;
}

TrainOutcome train_run(const fs::path& dataset_dir, const std::vector<BinaryMask>& masks,
                       const RunConfig& cfg, const fs::path& run_dir, bool force, std::ostream& log,
                       Exec exec) {
  cfg.validate();
  const TrainConfig tc = cfg.train_config();
  const PoseFile poses = read_pose_file(layout::poses(dataset_dir));
  const int frames = static_cast<int>(poses.poses.size());
  const std::vector<Image> images = load_degraded_images(dataset_dir, frames);
  RayDataset data;
  try {
    data = build_ray_dataset(images, masks, poses.intrinsics, poses.poses, poses.t_near, poses.t_far);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  prepare_dir(run_dir, force);

  auto to_checkpoint = [&](const TrainState& s) {
    return Checkpoint{cfg.field, s.params, s.iteration, cfg.seed, tc.samples_per_ray, tc.background};
  };
  TrainHooks hooks;
  hooks.progress = [&](const LossRecord& r) {
    log << "iter " << r.iteration + 1 << "/" << tc.iterations << "  loss " << fmt("%.6e", r.loss)
        << "  lr " << fmt("%.3e", r.lr) << "\n";
  };
  hooks.checkpoint = [&](const TrainState& s) {
    write_checkpoint(run_dir / layout::frame_name("ckpt_%06d.ckpt", s.iteration), to_checkpoint(s));
  };
  log << "training on " << data.entries.size() << " rays from " << frames << " frames\n";
  TrainResult result = train(data, cfg.field, tc, hooks, nullptr, exec);

  TrainOutcome out{to_checkpoint(result.state), std::move(result.history)};
  write_checkpoint(run_dir / "model.ckpt", out.checkpoint);
  std::ostringstream csv;
  csv << "iteration,lr,loss\n";
  for (const LossRecord& r : out.history) {
    csv << r.iteration << "," << fmt("%.17g", r.lr) << "," << fmt("%.17g", r.loss) << "\n";
  }
  write_text_file(run_dir / "loss.csv", csv.str());
  return out;
}

TrainOutcome cmd_train(const fs::path& dataset_dir, const RunConfig& cfg, const fs::path& run_dir,
                       bool unmasked, bool force, std::ostream& log, Exec exec) {
  std::vector<BinaryMask> masks;
  if (!unmasked) {
    const int frames = frame_count(dataset_dir);
    for (int f = 0; f < frames; ++f) {
      if (!fs::exists(layout::predicted_mask(dataset_dir, f))) {
        throw IoError("frame " + std::to_string(f) + ": missing predicted mask '" +
                      layout::predicted_mask(dataset_dir, f).string() + "' (run the mask command first)");
      }
    }
    masks = load_predicted_masks(dataset_dir, frames);
  }
  return train_run(dataset_dir, masks, cfg, run_dir, force, log, exec);
}

int cmd_render(const fs::path& checkpoint, const fs::path& poses_path, const fs::path& out_dir,
               bool force, std::ostream& log, Exec exec) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  const PoseFile poses = read_pose_file(poses_path);
  prepare_dir(out_dir, force);
  RenderSettings settings;
  settings.samples = ckpt.samples_per_ray;
  settings.jitter = false;
  settings.seed = ckpt.seed;
  settings.background = ckpt.background;
  const int frames = static_cast<int>(poses.poses.size());
  for (int f = 0; f < frames; ++f) {
    const Image img = render_view(ckpt.params, ckpt.field, poses.intrinsics,
                                  poses.poses[static_cast<std::size_t>(f)], poses.t_near, poses.t_far,
                                  settings, exec);
    write_ppm(layout::rendered_image(out_dir, f), img);
  }
  log << "rendered " << frames << " views to " << out_dir.string() << "\n";
  return frames;
}

EvalSummary cmd_eval(const fs::path& rendered_dir, const fs::path& clean_dir,
                     const std::optional<fs::path>& truth_dir, const fs::path& csv_out,
                     std::ostream& log) {
  int frames = 0;
  while (fs::exists(layout::rendered_image(rendered_dir, frames))) ++frames;
  if (frames == 0) throw IoError("no render_0000.ppm in '" + rendered_dir.string() + "'");
  std::vector<Image> rendered;
  for (int f = 0; f < frames; ++f) rendered.push_back(read_ppm(layout::rendered_image(rendered_dir, f)));
  const std::vector<Image> clean = load_clean_images(clean_dir, frames);
  std::vector<BinaryMask> truth;
  if (truth_dir) truth = load_truth_masks(*truth_dir, frames);

  EvalSummary s;
  double masked_total = 0.0;
  int masked_frames = 0;
  for (int f = 0; f < frames; ++f) {
    const std::size_t i = static_cast<std::size_t>(f);
    if (!rendered[i].same_size(clean[i])) {
      throw ConfigError("frame " + std::to_string(f) + ": rendered and clean sizes differ");
    }
    EvalRow row;
    row.frame = f;
    row.psnr = psnr(rendered[i], clean[i]);
    row.ssim = ssim(rendered[i], clean[i]);
    if (!truth.empty() && truth[i].count() > 0) {
      row.masked_psnr = masked_psnr(rendered[i], clean[i], truth[i]);
      masked_total += *row.masked_psnr;
      ++masked_frames;
    }
    s.mean_psnr += row.psnr;
    s.mean_ssim += row.ssim;
    s.rows.push_back(row);
  }
  s.mean_psnr /= frames;
  s.mean_ssim /= frames;
  if (masked_frames > 0) s.mean_masked_psnr = masked_total / masked_frames;

  std::ostringstream csv;
  csv << "frame,psnr,ssim,masked_psnr\n";
  for (const EvalRow& r : s.rows) {
    csv << r.frame << "," << fmt("%.6f", r.psnr) << "," << fmt("%.6f", r.ssim) << ","
        << (r.masked_psnr ? fmt("%.6f", *r.masked_psnr) : "") << "\n";
  }
  csv << "mean," << fmt("%.6f", s.mean_psnr) << "," << fmt("%.6f", s.mean_ssim) << ","
      << (s.mean_masked_psnr ? fmt("%.6f", *s.mean_masked_psnr) : "") << "\n";
  write_text_file(csv_out, csv.str());
  print_eval(s, log);
  return s;
}

AblationOutcome cmd_ablate(const fs::path& dataset_dir, const RunConfig& cfg, const fs::path& out_dir,
                           bool force, std::ostream& log, Exec exec) {
  cfg.validate();
  MaskConfig on = cfg.mask;
  on.enhancement = true;
  MaskConfig off = cfg.mask;
  off.enhancement = false;
  const std::vector<BinaryMask> masks_on = compute_masks(dataset_dir, on);
  const std::vector<BinaryMask> masks_off = compute_masks(dataset_dir, off);
  const int frames = static_cast<int>(masks_on.size());
  const std::optional<fs::path> truth =
      has_truth_masks(dataset_dir, frames) ? std::optional<fs::path>(dataset_dir) : std::nullopt;
  prepare_dir(out_dir, force);

  auto run = [&](const char* name, const std::vector<BinaryMask>& masks) {
    const fs::path dir = out_dir / name;
    log << "== " << name << "\n";
    train_run(dataset_dir, masks, cfg, dir, force, log, exec);
    cmd_render(dir / "model.ckpt", layout::poses(dataset_dir), dir / "renders", force, log, exec);
    return cmd_eval(dir / "renders", dataset_dir, truth, dir / "metrics.csv", log);
  };
  AblationOutcome out;
  out.enhanced = run("enhance_on", masks_on);
  out.plain = run("enhance_off", masks_off);

  std::ostringstream csv;
  csv << "variant,psnr,ssim,lpips\n";
  csv << "enhancement_off," << fmt("%.4f", out.plain.mean_psnr) << "," << fmt("%.4f", out.plain.mean_ssim)
      << ",unsupported\n";
  csv << "enhancement_on," << fmt("%.4f", out.enhanced.mean_psnr) << ","
      << fmt("%.4f", out.enhanced.mean_ssim) << ",unsupported\n";
  write_text_file(out_dir / "ablation.csv", csv.str());
  log << "\n| variant         | PSNR    | SSIM   | LPIPS       |\n"
      << "|-----------------|---------|--------|-------------|\n"
      << "| enhancement off | " << fmt("%7.4f", out.plain.mean_psnr) << " | "
      << fmt("%.4f", out.plain.mean_ssim) << " | unsupported |\n"
      << "| enhancement on  | " << fmt("%7.4f", out.enhanced.mean_psnr) << " | "
      << fmt("%.4f", out.enhanced.mean_ssim) << " | unsupported |\n";
  return out;
}

}  // namespace dropfield
