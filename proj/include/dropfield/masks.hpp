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

#include <cstddef>
#include <span>
#include <vector>

#include "dropfield/image.hpp"

namespace dropfield {

struct MaskConfig {
  double threshold = 0.3;
  int dilation_radius = 2;
  bool enhancement = true;

  void validate() const;
};

// M(u,v) = 1 iff A(u,v) >= t. Ties are masked.
BinaryMask binarize(const AttentionMap& attention, double threshold);

// Square (Chebyshev) structuring element of side 2r+1, window truncated at
// the borders. Computed as a row pass followed by a column pass.
BinaryMask dilate(const BinaryMask& mask, int radius);

AttentionMap mean_attention(std::span<const AttentionMap> maps);

// Per frame: dilate(binarize(A_i) OR binarize(mean(A))) with enhancement,
// dilate(binarize(A_i)) without. Dilation runs once, after the OR.
std::vector<BinaryMask> enhance_masks(std::span<const AttentionMap> maps, const MaskConfig& cfg);

struct MaskStats {
  double coverage = 0.0;  // fraction of pixels set in the predicted mask
  double iou = 0.0;       // 1 when both masks are empty
  std::size_t missed = 0;  // truth pixels absent from the prediction
};

MaskStats mask_stats(const BinaryMask& predicted, const BinaryMask& truth);

}  // namespace dropfield
