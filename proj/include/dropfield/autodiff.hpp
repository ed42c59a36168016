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

// Reverse-mode differentiation over a per-batch tape.
//
// Every traced value is a matrix whose rows are features and whose columns
// are independent lanes (one lane per ray sample, per ray, or a single lane
// for scalars and weight matrices). Elementwise primitives act lane by lane;
// matvec applies one weight matrix to every lane. Binary elementwise
// primitives accept an operand whose row or column count is 1 and repeat it
// along that axis, which covers bias vectors and per-lane scalars.
//
// A Tape is rebuilt for every batch and never shared between threads.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dropfield::ad {

using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Slice {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }

  bool operator==(const Slice&) const = default;
};

// Named, ordered slices over a flat buffer. Matrices are row-major.
class ParamLayout {
 public:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);

  const std::vector<Slice>& slices() const { return slices_; }
  const Slice& slice(std::size_t k) const { return slices_.at(k); }
  std::size_t find(const std::string& name) const;
  std::size_t total() const { return total_; }

  bool operator==(const ParamLayout&) const = default;

 private:
  std::vector<Slice> slices_;
  std::size_t total_ = 0;
};

class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(ParamLayout layout);  // zero-filled

  const ParamLayout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> slice(std::size_t k);
  std::span<const double> slice(std::size_t k) const;
  Eigen::Map<RowMajorMatrix> matrix(std::size_t k);
  Eigen::Map<const RowMajorMatrix> matrix(std::size_t k) const;

  bool all_finite() const;
  // Name of the first slice holding a non-finite value, empty if none.
  std::string first_non_finite_slice() const;

  bool operator==(const ParamVector&) const = default;

 private:
  ParamLayout layout_;
  std::vector<double> values_;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  double scalar() const;  // value of a 1x1 node
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

enum class Op {
  leaf,
  add,
  sub,
  mul,
  div,
  neg,
  exp,
  log,
  sin,
  cos,
  scale,
  matvec,
  relu,
  softplus,
  sigmoid,
  sum,
  squared_norm,
  concat_rows,
  row_block,
  segment_sum,
  segment_exclusive_cumsum,
  repeat_cols,
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant(double value);
  // Free leaf with a gradient slot (not tied to a ParamVector).
  Var variable(Matrix value);
  // Leaf bound to slice `k` of `params`; gradients flow back to that slice.
  Var parameter(const ParamVector& params, std::size_t k);

  // Zeroes all gradients, seeds d(loss)/d(loss) = 1 and walks the tape in
  // reverse creation order. Throws std::invalid_argument unless loss is 1x1.
  void backward(Var loss);

  // Gradient of the last backward pass; zero matrix for nodes not reached.
  Matrix grad(Var v) const;
  // Gradients of every parameter leaf, laid out like `layout`. Slices that
  // were never bound or not reached are zero.
  ParamVector parameter_gradient(const ParamLayout& layout) const;
  // Adds parameter-leaf gradients into `out` (layouts must agree).
  void accumulate_parameter_gradient(ParamVector& out) const;

  std::size_t node_count() const { return nodes_.size(); }
  // Number of nodes processed by the last backward pass.
  std::size_t last_backward_visits() const { return last_visits_; }

  // Node construction used by the primitive functions below.
  Var record(Op op, Matrix value, int lhs, int rhs = -1, double constant = 0.0,
             Eigen::Index aux = 0);
  const Matrix& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

 private:
  struct Node {
    Op op = Op::leaf;
    int lhs = -1;
    int rhs = -1;
    double constant = 0.0;
    Eigen::Index aux = 0;
    int param_slice = -1;
    bool requires_grad = false;
    Matrix value;
    Matrix grad;
  };

  void propagate(const Node& node);
  void accumulate(int id, Matrix g);

  std::vector<Node> nodes_;
  std::size_t last_visits_ = 0;
};

// Elementwise arithmetic with row/column repetition of size-1 operands.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);  // std::domain_error if any divisor is 0
Var neg(Var a);
Var exp(Var a);
Var log(Var a);  // std::domain_error if any operand <= 0
Var sin(Var a);
Var cos(Var a);
Var scale(Var a, double factor);  // constant factor, e.g. a power of two
Var relu(Var a);
Var softplus(Var a);
Var sigmoid(Var a);

// W (m x n) applied to every lane of x (n x L) -> m x L.
Var matvec(Var weights, Var x);

Var sum(Var a);           // 1x1 total
Var squared_norm(Var a);  // 1x1 sum of squares

// Structural primitives.
Var concat_rows(Var top, Var bottom);
Var row_block(Var a, Eigen::Index first_row, Eigen::Index count);
// Lanes are grouped in consecutive runs of `segment` columns.
Var segment_sum(Var a, Eigen::Index segment);  // rows x (L / segment)
Var segment_exclusive_cumsum(Var a, Eigen::Index segment);
// Each column repeated `times` times consecutively: rows x (L * times).
Var repeat_cols(Var a, Eigen::Index times);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(double c, Var a);
Var operator-(Var a, double c);
Var operator*(double c, Var a);
Var operator*(Var a, double c);

// Max over parameters of |analytic - central| / max(|analytic|, |central|, 1e-8)
// where central = (f(p + h e_i) - f(p - h e_i)) / 2h.
double central_difference_error(const std::function<double(const ParamVector&)>& f,
                                const ParamVector& analytic_gradient, const ParamVector& params,
                                double step);

// `f` builds its loss on the tape it is handed. The analytic gradient comes
// from one traced evaluation plus backward; the central differences re-run
// `f` on fresh tapes. Throws std::invalid_argument if step <= 0.
double finite_difference_check(const std::function<Var(Tape&, const ParamVector&)>& f,
                               const ParamVector& params, double step);

}  // namespace dropfield::ad
