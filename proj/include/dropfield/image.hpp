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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace dropfield {

using Color = std::array<double, 3>;

// RGB image, row-major, channels interleaved, values nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0);

  double& at(int u, int v, int c) { return data[(static_cast<std::size_t>(v) * width + u) * 3 + c]; }
  double at(int u, int v, int c) const {
    return data[(static_cast<std::size_t>(v) * width + u) * 3 + c];
  }
  Color pixel(int u, int v) const { return {at(u, v, 0), at(u, v, 1), at(u, v, 2)}; }
  void set(int u, int v, const Color& c) {
    for (int k = 0; k < 3; ++k) at(u, v, k) = c[k];
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_size(const Image& o) const { return width == o.width && height == o.height; }
};

// Single-channel real map. Attention maps use values in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0);

  double& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  double at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

using AttentionMap = GrayImage;

// 1 marks a waterdrop-covered pixel.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int w, int h, std::uint8_t fill = 0);

  std::uint8_t& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  std::uint8_t at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t count() const;

  bool operator==(const BinaryMask&) const = default;
};

std::uint8_t quantize(double v);
double dequantize(std::uint8_t q);
Image quantized(const Image& img);

// Binary PPM (P6) and PGM (P5), maxval 255. Writers quantize with
// round(clamp(v, 0, 1) * 255); readers return q / 255. Failures throw IoError.
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);
// Masks are written as 0 / 255; reading maps any nonzero byte to 1.
void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask_pgm(const std::filesystem::path& path);

}  // namespace dropfield
