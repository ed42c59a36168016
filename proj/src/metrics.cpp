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

#include "dropfield/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dropfield {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 1.0) * (0.01 * 1.0);
constexpr double kC2 = (0.03 * 1.0) * (0.03 * 1.0);

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    taps[i] = std::exp(-(x * x) / (2.0 * kSigma * kSigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Valid-mode separable filtering of one channel's five moment planes, then
// the SSIM map summed over output positions of row `v`.
double ssim_row(const Image& a, const Image& b, int channel, int v,
                const std::array<double, kWindow>& taps) {
  const int out_w = a.width - kWindow + 1;
  // Vertical pass over rows v..v+10 for every column.
  std::vector<double> mx(a.width), my(a.width), xx(a.width), yy(a.width), xy(a.width);
  for (int u = 0; u < a.width; ++u) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int k = 0; k < kWindow; ++k) {
      const double x = a.at(u, v + k, channel);
      const double y = b.at(u, v + k, channel);
      const double w = taps[k];
      sx += w * x;
      sy += w * y;
      sxx += w * x * x;
      syy += w * y * y;
      sxy += w * x * y;
    }
    mx[u] = sx;
    my[u] = sy;
    xx[u] = sxx;
    yy[u] = syy;
    xy[u] = sxy;
  }
  double row_sum = 0.0;
  for (int u = 0; u < out_w; ++u) {
    double mux = 0, muy = 0, exx = 0, eyy = 0, exy = 0;
    for (int k = 0; k < kWindow; ++k) {
      const double w = taps[k];
      mux += w * mx[u + k];
      muy += w * my[u + k];
      exx += w * xx[u + k];
      eyy += w * yy[u + k];
      exy += w * xy[u + k];
    }
    const double vx = exx - mux * mux;
    const double vy = eyy - muy * muy;
    const double cxy = exy - mux * muy;
    row_sum += ((2.0 * mux * muy + kC1) * (2.0 * cxy + kC2)) /
               ((mux * mux + muy * muy + kC1) * (vx + vy + kC2));
  }
  return row_sum;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw std::invalid_argument("psnr: image dimensions differ");
  if (a.data.empty()) throw std::invalid_argument("psnr: empty image");
  double total = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    total += d * d;
  }
  return psnr_from_mse(total / static_cast<double>(a.data.size()));
}

double ssim(const Image& a, const Image& b, Exec exec) {
  if (!a.same_size(b)) throw std::invalid_argument("ssim: image dimensions differ");
  if (a.width < kWindow || a.height < kWindow) {
    throw std::invalid_argument("ssim: images must be at least 11x11");
  }
  const auto taps = gaussian_taps();
  const int out_h = a.height - kWindow + 1;
  const int out_w = a.width - kWindow + 1;
  // Rows are reduced in a fixed order afterwards so both paths agree bit for bit.
  std::vector<double> row_sums(static_cast<std::size_t>(3 * out_h));
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int job = 0; job < 3 * out_h; ++job) {
      row_sums[static_cast<std::size_t>(job)] = ssim_row(a, b, job / out_h, job % out_h, taps);
    }
  } else {
    for (int job = 0; job < 3 * out_h; ++job) {
      row_sums[static_cast<std::size_t>(job)] = ssim_row(a, b, job / out_h, job % out_h, taps);
    }
  }
  double total = 0.0;
  for (double s : row_sums) total += s;
  return total / (3.0 * out_h * out_w);
}

double masked_psnr(const Image& a, const Image& b, const BinaryMask& region) {
  if (!a.same_size(b) || region.width != a.width || region.height != a.height) {
    throw std::invalid_argument("masked_psnr: dimensions differ");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (int v = 0; v < a.height; ++v) {
    for (int u = 0; u < a.width; ++u) {
      if (!region.at(u, v)) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = a.at(u, v, c) - b.at(u, v, c);
        total += d * d;
      }
      count += 3;
    }
  }
  if (count == 0) throw std::invalid_argument("masked_psnr: region is empty");
  return psnr_from_mse(total / static_cast<double>(count));
}

}  // namespace dropfield
