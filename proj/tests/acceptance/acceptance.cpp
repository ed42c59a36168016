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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance [--work DIR] [--keep] [criterion ...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dropfield/commands.hpp"
#include "dropfield/dataset_io.hpp"
#include "dropfield/metrics.hpp"
#include "dropfield/render.hpp"
#include "dropfield/rng.hpp"

using namespace dropfield;
namespace fs = std::filesystem;

namespace {

// Tolerances and margins.
constexpr double kGradientTol = 1e-4;
constexpr double kFdStep = 1e-6;
constexpr double kTransmittanceTol = 1e-3;
constexpr double kWeightSumTol = 1e-9;
constexpr int kMaskCases = 10000;
constexpr double kMinCoverage = 0.12;
constexpr double kMaxCoverage = 0.18;
constexpr double kPsnrMargin = 2.0;
constexpr double kMaskedPsnrMargin = 3.0;
constexpr double kLossDecrease = 10.0;
constexpr int kFinalLossWindow = 50;
constexpr double kEnhanceMargin = 0.3;
constexpr double kMaskedPMiss = 0.3;
constexpr int kIndependenceIterations = 500;
constexpr int kDeterminismIterations = 300;
constexpr double kMetricTol = 1e-9;
// 5000 iterations is a small fraction of a full-length schedule; the
// fixture scales the learning rate up tenfold to compensate.
constexpr double kFixtureLrStart = 5e-3;
constexpr double kFixtureLrEnd = 5e-4;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Relative paths of regular files that differ between two trees, or exist in one only.
std::vector<std::string> tree_differences(const fs::path& a, const fs::path& b) {
  std::set<std::string> names;
  for (const fs::path& root : {a, b}) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) names.insert(fs::relative(e.path(), root).string());
    }
  }
  std::vector<std::string> diff;
  for (const std::string& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) diff.push_back(n);
  }
  return diff;
}

// 20 views, 64x64, lens-fixed random drops, seed 0, desk-scale training.
RunConfig fixture(double p_miss) {
  RunConfig cfg;
  cfg.seed = 0;
  cfg.width = 64;
  cfg.height = 64;
  cfg.ring.views = 20;
  cfg.drops.mode = DropMode::lens_fixed;
  cfg.detector.p_miss = p_miss;
  cfg.train.iterations = 5000;
  cfg.train.batch_rays = 512;
  cfg.train.samples_per_ray = 64;
  cfg.train.lr_start = kFixtureLrStart;
  cfg.train.lr_end = kFixtureLrEnd;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------- 1

Verdict gradient_check() {
  FieldConfig field;
  field.depth = 2;
  field.width = 8;
  field.skip_layer = std::nullopt;
  const Intrinsics intr = Intrinsics::from_fov(16, 16, 40.0);
  CameraRing ring;
  ring.views = 2;
  const std::vector<Pose> poses = ring.poses();
  std::vector<Image> images;
  for (const Pose& p : poses) images.push_back(render_clean(SceneSpec::desk_default(), intr, p));
  const RayDataset data = build_ray_dataset(images, {}, intr, poses, 1.5, 6.5);
  const std::vector<std::size_t> batch{17, 130, 301, 466};
  RenderSettings settings;
  settings.samples = 8;
  settings.jitter = true;
  settings.seed = 5;
  const ad::ParamVector params = init_params(field, 3);
  auto loss_at = [&](const ad::ParamVector& q) {
    return batch_loss_and_gradient(q, field, data, batch, settings, 0, 4).loss;
  };
  const BatchResult br = batch_loss_and_gradient(params, field, data, batch, settings, 0, 4);
  const double err = ad::central_difference_error(loss_at, br.gradient, params, kFdStep);
  return {err < kGradientTol, fmt("max relative error %.3e over %zu parameters (limit %.0e)", err,
                                  params.size(), kGradientTol)};
}

// ---------------------------------------------------------------- 2

Verdict renderer_oracle() {
  const double sigma = 0.4, t_near = 1.5, t_far = 6.5;
  const int n = 1024;
  const std::vector<double> sigmas(n, sigma);
  const std::vector<Color> colors(n, Color{0.2, 0.5, 0.7});
  const std::vector<double> deltas(n, (t_far - t_near) / n);
  const RenderOutput flat = composite(sigmas, colors, deltas, Color{1, 1, 1});
  const double expected = std::exp(-sigma * (t_far - t_near));
  const double t_err = std::abs(flat.final_transmittance - expected);

  Stream rng(0xacce, 2);
  double worst = 0.0;
  for (int r = 0; r < 1000; ++r) {
    const int samples = 1 + static_cast<int>(rng.below(128));
    std::vector<double> s(samples), d(samples);
    std::vector<Color> c(samples);
    for (int i = 0; i < samples; ++i) {
      s[i] = rng.uniform() < 0.2 ? 0.0 : rng.uniform(0.0, 20.0);
      d[i] = rng.uniform(1e-3, 0.2);
      c[i] = {rng.uniform(), rng.uniform(), rng.uniform()};
    }
    const RenderOutput out = composite(s, c, d, Color{0, 0, 0});
    double total = out.final_transmittance;
    for (double w : out.weights) total += w;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return {t_err < kTransmittanceTol && worst < kWeightSumTol,
          fmt("transmittance error %.3e (limit %.0e), worst weight-sum error %.3e over 1000 rays (limit %.0e)",
              t_err, kTransmittanceTol, worst, kWeightSumTol)};
}

// ---------------------------------------------------------------- 3

constexpr int kGrid = 8;

BinaryMask ref_binarize(const AttentionMap& a, double t) {
  BinaryMask m(a.width, a.height);
  for (int v = 0; v < a.height; ++v)
    for (int u = 0; u < a.width; ++u) m.at(u, v) = a.at(u, v) >= t ? 1 : 0;
  return m;
}

BinaryMask ref_dilate(const BinaryMask& m, int r) {
  BinaryMask out(m.width, m.height);
  for (int v = 0; v < m.height; ++v) {
    for (int u = 0; u < m.width; ++u) {
      for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
          if (m.at(x, y) && std::abs(x - u) <= r && std::abs(y - v) <= r) out.at(u, v) = 1;
        }
      }
    }
  }
  return out;
}

BinaryMask ref_or(const BinaryMask& a, const BinaryMask& b) {
  BinaryMask out(a.width, a.height);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] | b.data[i];
  return out;
}

bool contains(const BinaryMask& outer, const BinaryMask& inner) {
  for (std::size_t i = 0; i < outer.data.size(); ++i)
    if (inner.data[i] && !outer.data[i]) return false;
  return true;
}

// Values on the 8-bit grid so exact ties with the threshold occur.
AttentionMap random_attention(Stream& rng) {
  AttentionMap a(kGrid, kGrid);
  const double density = rng.uniform();
  for (double& v : a.data) v = rng.uniform() < density ? static_cast<double>(rng.below(256)) / 255.0 : 0.0;
  return a;
}

Verdict mask_algebra() {
  Stream rng(0xacce, 3);
  int bad_binarize = 0, bad_dilate = 0, bad_enhance = 0, bad_superset = 0;
  for (int c = 0; c < kMaskCases; ++c) {
    const AttentionMap a = random_attention(rng);
    const double t = static_cast<double>(1 + rng.below(254)) / 255.0;
    bad_binarize += !(binarize(a, t) == ref_binarize(a, t));

    BinaryMask m(kGrid, kGrid);
    const double density = rng.uniform(0.0, 0.3);
    for (auto& x : m.data) x = rng.uniform() < density ? 1 : 0;
    const int r = static_cast<int>(rng.below(5));
    bad_dilate += !(dilate(m, r) == ref_dilate(m, r));

    const int frames = 2 + static_cast<int>(rng.below(5));
    std::vector<AttentionMap> stack;
    for (int f = 0; f < frames; ++f) stack.push_back(random_attention(rng));
    MaskConfig on;
    on.threshold = t;
    on.dilation_radius = static_cast<int>(rng.below(3));
    on.enhancement = true;
    MaskConfig off = on;
    off.enhancement = false;
    const auto got_on = enhance_masks(stack, on);
    const auto got_off = enhance_masks(stack, off);
    AttentionMap mean(kGrid, kGrid);
    for (const AttentionMap& s : stack)
      for (std::size_t i = 0; i < mean.data.size(); ++i) mean.data[i] += s.data[i];
    for (double& v : mean.data) v /= frames;
    const BinaryMask shared = ref_binarize(mean, t);
    for (int f = 0; f < frames; ++f) {
      const BinaryMask own = ref_binarize(stack[f], t);
      const bool ok_on = got_on[f] == ref_dilate(ref_or(own, shared), on.dilation_radius);
      const bool ok_off = got_off[f] == ref_dilate(own, on.dilation_radius);
      bad_enhance += !(ok_on && ok_off);
      bad_superset += !contains(got_on[f], got_off[f]);
    }
  }
  const int bad = bad_binarize + bad_dilate + bad_enhance + bad_superset;
  return {bad == 0, fmt("%d cases each on %dx%d grids; mismatches: binarize %d, dilate %d, enhance %d, "
                        "superset %d",
                        kMaskCases, kGrid, kGrid, bad_binarize, bad_dilate, bad_enhance, bad_superset)};
}

// ---------------------------------------------------------------- 4 and 5

struct PairedRuns {
  EvalSummary a;
  EvalSummary b;
  std::vector<LossRecord> history_b;
  double coverage = 0.0;
};

double final_loss(const std::vector<LossRecord>& h) {
  const int n = std::min<int>(kFinalLossWindow, static_cast<int>(h.size()));
  double s = 0.0;
  for (int i = static_cast<int>(h.size()) - n; i < static_cast<int>(h.size()); ++i) s += h[i].loss;
  return s / n;
}

Verdict deraining_benefit(const fs::path& work) {
  std::ostringstream log;
  const RunConfig cfg = fixture(0.0);
  const fs::path data = work / "c4" / "data";
  const SynthOutcome s = cmd_synth(cfg, data, true, log);
  cmd_mask(data, cfg.mask, log);
  const TrainOutcome base = cmd_train(data, cfg, work / "c4" / "baseline", true, true, log);
  const TrainOutcome masked = cmd_train(data, cfg, work / "c4" / "masked", false, true, log);
  cmd_render(work / "c4" / "baseline" / "model.ckpt", layout::poses(data), work / "c4" / "baseline" / "renders",
             true, log);
  cmd_render(work / "c4" / "masked" / "model.ckpt", layout::poses(data), work / "c4" / "masked" / "renders",
             true, log);
  const EvalSummary eb = cmd_eval(work / "c4" / "baseline" / "renders", data, data,
                                  work / "c4" / "baseline" / "metrics.csv", log);
  const EvalSummary em = cmd_eval(work / "c4" / "masked" / "renders", data, data,
                                  work / "c4" / "masked" / "metrics.csv", log);

  const bool coverage_ok = s.mean_truth_coverage >= kMinCoverage && s.mean_truth_coverage <= kMaxCoverage;
  const double gain = em.mean_psnr - eb.mean_psnr;
  const double masked_gain = *em.mean_masked_psnr - *eb.mean_masked_psnr;
  const double first = masked.history.front().loss;
  const double last = final_loss(masked.history);
  const bool loss_ok = first / last >= kLossDecrease;
  const bool pass = coverage_ok && gain >= kPsnrMargin && masked_gain >= kMaskedPsnrMargin && loss_ok;
  (void)base;
  return {pass,
          fmt("drop coverage %.2f%%; PSNR masked %.3f vs baseline %.3f dB (gain %.3f, need %.1f); "
              "drop-region PSNR masked %.3f vs baseline %.3f dB (gain %.3f, need %.1f); SSIM %.4f vs %.4f; "
              "masked loss %.5f -> %.6f over last %d iterations (%.1fx, need %.0fx)",
              100.0 * s.mean_truth_coverage, em.mean_psnr, eb.mean_psnr, gain, kPsnrMargin,
              *em.mean_masked_psnr, *eb.mean_masked_psnr, masked_gain, kMaskedPsnrMargin, em.mean_ssim,
              eb.mean_ssim, first, last, kFinalLossWindow, first / last, kLossDecrease)};
}

Verdict ablation(const fs::path& work) {
  std::ostringstream log;
  const RunConfig cfg = fixture(kMaskedPMiss);
  const fs::path data = work / "c5" / "data";
  cmd_synth(cfg, data, true, log);
  const AblationOutcome a = cmd_ablate(data, cfg, work / "c5" / "ablate", true, log);
  int lower = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.enhanced.rows.size(); ++i) {
    const double d = a.enhanced.rows[i].psnr - a.plain.rows[i].psnr;
    lower += d < 0.0;
    worst = std::min(worst, d);
  }
  const double gain = a.enhanced.mean_psnr - a.plain.mean_psnr;
  return {gain >= kEnhanceMargin && lower == 0,
          fmt("p_miss %.1f; PSNR enhancement on %.3f vs off %.3f dB (gain %.3f, need %.1f); "
              "views where on < off: %d of %zu (worst %.3f dB)",
              kMaskedPMiss, a.enhanced.mean_psnr, a.plain.mean_psnr, gain, kEnhanceMargin, lower,
              a.enhanced.rows.size(), worst)};
}

// ---------------------------------------------------------------- 6

Verdict mask_independence(const fs::path& work) {
  std::ostringstream log;
  RunConfig cfg = fixture(0.0);
  cfg.train.iterations = kIndependenceIterations;
  const fs::path data = work / "c6" / "data";
  cmd_synth(cfg, data, true, log);
  cmd_mask(data, cfg.mask, log);
  cmd_train(data, cfg, work / "c6" / "original", false, true, log);

  Stream rng(0xacce, 6);
  const auto masks = load_predicted_masks(data, cfg.ring.views);
  std::size_t changed = 0;
  for (int f = 0; f < cfg.ring.views; ++f) {
    Image img = read_ppm(layout::degraded_image(data, f));
    const Image before = img;
    for (int v = 0; v < img.height; ++v)
      for (int u = 0; u < img.width; ++u)
        if (masks[f].at(u, v))
          for (int c = 0; c < 3; ++c) img.at(u, v, c) = dequantize(static_cast<std::uint8_t>(rng.below(256)));
    for (std::size_t i = 0; i < img.data.size(); ++i) changed += img.data[i] != before.data[i];
    write_ppm(layout::degraded_image(data, f), img);
  }
  cmd_train(data, cfg, work / "c6" / "perturbed", false, true, log);
  const bool same = slurp(work / "c6" / "original" / "model.ckpt") == slurp(work / "c6" / "perturbed" / "model.ckpt");
  return {same && changed > 0,
          fmt("%zu masked channel values randomized; %d-iteration checkpoints %s", changed,
              kIndependenceIterations, same ? "byte-identical" : "differ")};
}

// ---------------------------------------------------------------- 7

Verdict determinism(const fs::path& work) {
  std::ostringstream log;
  RunConfig cfg = fixture(kMaskedPMiss);
  cfg.train.iterations = kDeterminismIterations;
  cfg.train.checkpoint_every = 100;
  for (const char* run : {"a", "b"}) {
    const fs::path root = work / "c7" / run;
    cmd_synth(cfg, root / "data", true, log);
    cmd_mask(root / "data", cfg.mask, log);
    cmd_train(root / "data", cfg, root / "run", false, true, log);
  }
  const auto data_diff = tree_differences(work / "c7" / "a" / "data", work / "c7" / "b" / "data");
  const auto run_diff = tree_differences(work / "c7" / "a" / "run", work / "c7" / "b" / "run");
  std::string detail = fmt("synth outputs: %zu differing files; train outputs (%d iterations): %zu differing files",
                           data_diff.size(), kDeterminismIterations, run_diff.size());
  for (const auto& n : data_diff) detail += " [data/" + n + "]";
  for (const auto& n : run_diff) detail += " [run/" + n + "]";
  return {data_diff.empty() && run_diff.empty(), detail};
}

// ---------------------------------------------------------------- 8

double naive_psnr(const Image& a, const Image& b) {
  double se = 0.0;
  int n = 0;
  for (int v = 0; v < a.height; ++v)
    for (int u = 0; u < a.width; ++u)
      for (int c = 0; c < 3; ++c) {
        const double d = a.at(u, v, c) - b.at(u, v, c);
        se += d * d;
        ++n;
      }
  return se == 0.0 ? kPsnrCap : 10.0 * std::log10(n / se);
}

// Direct windowed formula: 2-D Gaussian weights, two-pass moments.
double naive_ssim(const Image& a, const Image& b) {
  const int w = 11, half = 5;
  const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
  double kernel[11][11];
  double norm = 0.0;
  for (int i = 0; i < w; ++i)
    for (int j = 0; j < w; ++j) {
      kernel[i][j] = std::exp(-((i - half) * (i - half) + (j - half) * (j - half)) / (2 * sigma * sigma));
      norm += kernel[i][j];
    }
  double total = 0.0;
  int count = 0;
  for (int c = 0; c < 3; ++c) {
    for (int v = half; v < a.height - half; ++v) {
      for (int u = half; u < a.width - half; ++u) {
        double mx = 0, my = 0;
        for (int i = 0; i < w; ++i)
          for (int j = 0; j < w; ++j) {
            const double k = kernel[i][j] / norm;
            mx += k * a.at(u + j - half, v + i - half, c);
            my += k * b.at(u + j - half, v + i - half, c);
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int i = 0; i < w; ++i)
          for (int j = 0; j < w; ++j) {
            const double k = kernel[i][j] / norm;
            const double dx = a.at(u + j - half, v + i - half, c) - mx;
            const double dy = b.at(u + j - half, v + i - half, c) - my;
            vx += k * dx * dx;
            vy += k * dy * dy;
            cxy += k * dx * dy;
          }
        total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
  }
  return total / count;
}

Verdict metric_oracles() {
  Stream rng(0xacce, 8);
  double worst_psnr = 0.0, worst_ssim = 0.0, worst_self = 0.0;
  for (int pair = 0; pair < 50; ++pair) {
    Image a(16, 16), b(16, 16);
    const double amp = rng.uniform(0.01, 0.5);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      a.data[i] = 0.5 + 0.4 * std::sin(0.37 * static_cast<double>(i) + pair);
      b.data[i] = std::clamp(a.data[i] + amp * (rng.uniform() - 0.5), 0.0, 1.0);
    }
    worst_psnr = std::max(worst_psnr, std::abs(psnr(a, b) - naive_psnr(a, b)));
    worst_ssim = std::max(worst_ssim, std::abs(ssim(a, b) - naive_ssim(a, b)));
    worst_ssim = std::max(worst_ssim, std::abs(ssim(a, b, Exec::serial) - naive_ssim(a, b)));
    worst_self = std::max(worst_self, std::abs(ssim(a, a) - 1.0));
  }
  return {worst_psnr < kMetricTol && worst_ssim < kMetricTol && worst_self == 0.0,
          fmt("50 pairs of 16x16: worst |PSNR - naive| %.3e, worst |SSIM - naive| %.3e (limit %.0e); "
              "worst |ssim(a,a) - 1| %.3e",
              worst_psnr, worst_ssim, kMetricTol, worst_self)};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "dropfield_acceptance";
  bool keep = false;
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (arg == "--keep") {
      keep = true;
    } else {
      selected.insert(std::stoi(arg));
    }
  }
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8};

  const std::map<int, std::pair<const char*, std::function<Verdict()>>> criteria{
      {1, {"gradient correctness", gradient_check}},
      {2, {"renderer oracle", renderer_oracle}},
      {3, {"mask algebra", mask_algebra}},
      {4, {"deraining benefit", [&] { return deraining_benefit(work); }}},
      {5, {"enhancement ablation", [&] { return ablation(work); }}},
      {6, {"mask independence", [&] { return mask_independence(work); }}},
      {7, {"determinism", [&] { return determinism(work); }}},
      {8, {"metric oracles", metric_oracles}},
  };

  int failures = 0;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = it->second.second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !v.pass;
    std::printf("criterion %d %s (%s): %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", it->second.first,
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  if (!keep) fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
