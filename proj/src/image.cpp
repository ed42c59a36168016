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

#include "dropfield/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "dropfield/common.hpp"

namespace dropfield {

Image::Image(int w, int h, double fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

GrayImage::GrayImage(int w, int h, double fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

BinaryMask::BinaryMask(int w, int h, std::uint8_t fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

std::uint8_t quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

double dequantize(std::uint8_t q) { return q / 255.0; }

Image quantized(const Image& img) {
  Image out = img;
  for (double& v : out.data) v = dequantize(quantize(v));
  return out;
}

namespace {

void write_netpbm(const std::filesystem::path& path, const char* magic, int w, int h,
                  const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << magic << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Reads the header token-by-token, skipping '#' comments.
std::string next_token(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  if (tok.empty()) throw IoError("truncated header in '" + path.string() + "'");
  return tok;
}

std::vector<std::uint8_t> read_netpbm(const std::filesystem::path& path, const std::string& magic,
                                      int channels, int& w, int& h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  if (next_token(in, path) != magic) {
    throw IoError("'" + path.string() + "' is not a binary " + magic + " file");
  }
  try {
    w = std::stoi(next_token(in, path));
    h = std::stoi(next_token(in, path));
    const int maxval = std::stoi(next_token(in, path));
    if (maxval != 255) throw IoError("'" + path.string() + "': only 8-bit files are supported");
  } catch (const std::logic_error&) {
    throw IoError("malformed header in '" + path.string() + "'");
  }
  if (w < 1 || h < 1) throw IoError("'" + path.string() + "' has an empty image");
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError("'" + path.string() + "' is truncated");
  }
  return bytes;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::vector<std::uint8_t> bytes(img.data.size());
  std::transform(img.data.begin(), img.data.end(), bytes.begin(), quantize);
  write_netpbm(path, "P6", img.width, img.height, bytes);
}

Image read_ppm(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const auto bytes = read_netpbm(path, "P6", 3, w, h);
  Image img(w, h);
  std::transform(bytes.begin(), bytes.end(), img.data.begin(), dequantize);
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::vector<std::uint8_t> bytes(img.data.size());
  std::transform(img.data.begin(), img.data.end(), bytes.begin(), quantize);
  write_netpbm(path, "P5", img.width, img.height, bytes);
}

GrayImage read_pgm(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const auto bytes = read_netpbm(path, "P5", 1, w, h);
  GrayImage img(w, h);
  std::transform(bytes.begin(), bytes.end(), img.data.begin(), dequantize);
  return img;
}

void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.data.size());
  std::transform(mask.data.begin(), mask.data.end(), bytes.begin(),
                 [](std::uint8_t m) { return static_cast<std::uint8_t>(m ? 255 : 0); });
  write_netpbm(path, "P5", mask.width, mask.height, bytes);
}

BinaryMask read_mask_pgm(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const auto bytes = read_netpbm(path, "P5", 1, w, h);
  BinaryMask mask(w, h);
  std::transform(bytes.begin(), bytes.end(), mask.data.begin(),
                 [](std::uint8_t b) { return static_cast<std::uint8_t>(b != 0); });
  return mask;
}

}  // namespace dropfield
