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

// Radiance field: frequency encoding followed by an MLP that maps a point to
// density and, together with the encoded view direction, to color.
//
//   enc(x)  = [x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{L-1} pi x), cos(2^{L-1} pi x)]
//   h_0     = relu(W_0 enc(p) + b_0)
//   h_i     = relu(W_i [h_{i-1} (, enc(p) at the skip layer)] + b_i)
//   sigma   = softplus|relu(w_sigma . h + b_sigma)
//   rgb     = sigmoid(W_rgb [h, enc(d)] + b_rgb)

#include <cstdint>
#include <optional>
#include <vector>

#include "dropfield/autodiff.hpp"
#include "dropfield/camera.hpp"
#include "dropfield/image.hpp"

namespace dropfield {

struct EncodingConfig {
  int pos_frequencies = 6;
  int dir_frequencies = 2;

  bool operator==(const EncodingConfig&) const = default;
};

enum class DensityActivation { softplus, relu };

struct FieldConfig {
  int depth = 4;
  int width = 64;
  std::optional<int> skip_layer = 2;
  DensityActivation density = DensityActivation::softplus;
  EncodingConfig encoding;

  void validate() const;
  bool operator==(const FieldConfig&) const = default;
};

int encoded_size(int components, int frequencies);

ad::ParamLayout field_layout(const FieldConfig& cfg);

// Glorot-uniform weights, zero biases. Deterministic in seed.
ad::ParamVector init_params(const FieldConfig& cfg, std::uint64_t seed);

// x: k x lanes -> (k + 2kL) x lanes.
ad::Var positional_encode(ad::Var x, int frequencies);
std::vector<double> positional_encode(std::span<const double> x, int frequencies);

// Parameter slices bound to one tape. With trainable = false the slices are
// recorded as constants, which skips all gradient bookkeeping.
struct FieldVars {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
  ad::Var sigma_weight;
  ad::Var sigma_bias;
  ad::Var color_weight;
  ad::Var color_bias;
};

FieldVars bind_field(ad::Tape& tape, const ad::ParamVector& params, const FieldConfig& cfg,
                     bool trainable);

struct TracedFieldOutput {
  ad::Var sigma;  // 1 x lanes
  ad::Var color;  // 3 x lanes
};

// points: 3 x lanes. dirs: 3 x (lanes / dir_repeat); each direction serves
// dir_repeat consecutive points, so a ray's direction is encoded once.
TracedFieldOutput field_forward(const FieldVars& vars, const FieldConfig& cfg, ad::Var points,
                                ad::Var dirs, Eigen::Index dir_repeat = 1);

struct FieldOutput {
  double sigma = 0.0;
  Color color{};
};

FieldOutput field_eval(const ad::ParamVector& params, const FieldConfig& cfg, const Vec3& point,
                       const Vec3& dir);

// Total number of points pushed through field_forward in this process.
std::uint64_t field_point_evaluations();

}  // namespace dropfield
