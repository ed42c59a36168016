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

#include "dropfield/field.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dropfield/rng.hpp"

namespace dropfield {

namespace {
std::atomic<std::uint64_t> g_point_evaluations{0};
}

std::uint64_t field_point_evaluations() { return g_point_evaluations.load(); }

void FieldConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("field depth must be >= 1");
  if (width < 1) throw std::invalid_argument("field width must be >= 1");
  if (skip_layer && (*skip_layer < 0 || *skip_layer >= depth)) {
    throw std::invalid_argument("skip layer must lie in [0, depth)");
  }
  if (encoding.pos_frequencies < 0 || encoding.dir_frequencies < 0) {
    throw std::invalid_argument("encoding frequency counts must be >= 0");
  }
}

int encoded_size(int components, int frequencies) { return components + 2 * components * frequencies; }

namespace {

bool takes_skip(const FieldConfig& cfg, int layer) {
  // Layer 0 already consumes the encoded position.
  return cfg.skip_layer && *cfg.skip_layer == layer && layer > 0;
}

}  // namespace

ad::ParamLayout field_layout(const FieldConfig& cfg) {
  cfg.validate();
  const int pos = encoded_size(3, cfg.encoding.pos_frequencies);
  const int dir = encoded_size(3, cfg.encoding.dir_frequencies);
  ad::ParamLayout layout;
  for (int i = 0; i < cfg.depth; ++i) {
    const int in = (i == 0 ? pos : cfg.width) + (takes_skip(cfg, i) ? pos : 0);
    layout.add("layer" + std::to_string(i) + ".weight", cfg.width, in);
    layout.add("layer" + std::to_string(i) + ".bias", cfg.width, 1);
  }
  layout.add("sigma.weight", 1, cfg.width);
  layout.add("sigma.bias", 1, 1);
  layout.add("color.weight", 3, cfg.width + dir);
  layout.add("color.bias", 3, 1);
  return layout;
}

ad::ParamVector init_params(const FieldConfig& cfg, std::uint64_t seed) {
  ad::ParamVector params(field_layout(cfg));
  const auto& slices = params.layout().slices();
  for (std::size_t k = 0; k < slices.size(); ++k) {
    const ad::Slice& s = slices[k];
    if (s.cols == 1) continue;  // biases stay zero
    const double bound = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    Stream rng(seed, 0x1417u, k);
    for (double& w : params.slice(k)) w = rng.uniform(-bound, bound);
  }
  return params;
}

ad::Var positional_encode(ad::Var x, int frequencies) {
  if (frequencies < 0) throw std::invalid_argument("frequency count must be >= 0");
  if (frequencies == 0) return x;
  // Octave l + 1 from octave l by the double-angle identities
  //   sin 2a = 2 sin a cos a,   cos 2a = cos^2 a - sin^2 a,
  // so only the first octave pays for sin and cos. Rounding grows by about
  // one ulp per octave.
  const ad::Var base = ad::scale(x, std::numbers::pi);
  ad::Var s = ad::sin(base);
  ad::Var c = ad::cos(base);
  ad::Var out = ad::concat_rows(x, ad::concat_rows(s, c));
  for (int l = 1; l < frequencies; ++l) {
    const ad::Var next_s = ad::scale(s * c, 2.0);
    const ad::Var next_c = c * c - s * s;
    s = next_s;
    c = next_c;
    out = ad::concat_rows(out, ad::concat_rows(s, c));
  }
  return out;
}

std::vector<double> positional_encode(std::span<const double> x, int frequencies) {
  ad::Tape tape;
  const ad::Matrix column = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const ad::Var out = positional_encode(tape.constant(column), frequencies);
  return {out.value().data(), out.value().data() + out.value().size()};
}

FieldVars bind_field(ad::Tape& tape, const ad::ParamVector& params, const FieldConfig& cfg,
                     bool trainable) {
  if (params.layout() != field_layout(cfg)) {
    throw std::invalid_argument("parameter layout does not match the field configuration");
  }
  auto bind = [&](std::size_t k) {
    return trainable ? tape.parameter(params, k) : tape.constant(ad::Matrix(params.matrix(k)));
  };
  FieldVars vars;
  std::size_t k = 0;
  for (int i = 0; i < cfg.depth; ++i) {
    vars.weights.push_back(bind(k++));
    vars.biases.push_back(bind(k++));
  }
  vars.sigma_weight = bind(k++);
  vars.sigma_bias = bind(k++);
  vars.color_weight = bind(k++);
  vars.color_bias = bind(k++);
  return vars;
}

TracedFieldOutput field_forward(const FieldVars& vars, const FieldConfig& cfg, ad::Var points,
                                ad::Var dirs, Eigen::Index dir_repeat) {
  if (dirs.cols() * dir_repeat != points.cols()) {
    throw std::invalid_argument("field_forward: direction count does not match the points");
  }
  g_point_evaluations.fetch_add(static_cast<std::uint64_t>(points.cols()));
  const ad::Var enc_pos = positional_encode(points, cfg.encoding.pos_frequencies);
  ad::Var enc_dir = positional_encode(dirs, cfg.encoding.dir_frequencies);
  if (dir_repeat > 1) enc_dir = ad::repeat_cols(enc_dir, dir_repeat);

  ad::Var h = enc_pos;
  for (int i = 0; i < cfg.depth; ++i) {
    const ad::Var in = takes_skip(cfg, i) ? ad::concat_rows(h, enc_pos) : h;
    h = ad::relu(ad::matvec(vars.weights[i], in) + vars.biases[i]);
  }
  const ad::Var raw_sigma = ad::matvec(vars.sigma_weight, h) + vars.sigma_bias;
  TracedFieldOutput out;
  out.sigma = cfg.density == DensityActivation::softplus ? ad::softplus(raw_sigma)
                                                         : ad::relu(raw_sigma);
  const ad::Var color_in = ad::concat_rows(h, enc_dir);
  out.color = ad::sigmoid(ad::matvec(vars.color_weight, color_in) + vars.color_bias);
  return out;
}

FieldOutput field_eval(const ad::ParamVector& params, const FieldConfig& cfg, const Vec3& point,
                       const Vec3& dir) {
  if (std::abs(dir.norm() - 1.0) > 1e-6) throw std::invalid_argument("direction must be unit length");
  ad::Tape tape;
  const FieldVars vars = bind_field(tape, params, cfg, false);
  const TracedFieldOutput out =
      field_forward(vars, cfg, tape.constant(ad::Matrix(point)), tape.constant(ad::Matrix(dir)));
  FieldOutput result;
  result.sigma = out.sigma.scalar();
  for (int c = 0; c < 3; ++c) result.color[c] = out.color.value()(c, 0);
  return result;
}

}  // namespace dropfield
