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

#include "dropfield/common.hpp"
#include "dropfield/image.hpp"

namespace dropfield {

inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE) over all pixels and channels, peak 1. Identical images
// give kPsnrCap.
double psnr(const Image& a, const Image& b);

// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, dynamic range 1. Averaged over every window that fits inside
// the image and over channels. Needs images of at least 11x11.
double ssim(const Image& a, const Image& b, Exec exec = Exec::parallel);

// PSNR over the pixels where region == 1 (all three channels).
double masked_psnr(const Image& a, const Image& b, const BinaryMask& region);

}  // namespace dropfield
