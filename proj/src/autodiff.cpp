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

#include "dropfield/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace dropfield::ad {

namespace {

// Tapes allocate and release many mid-sized matrices per batch. glibc's
// default trimming hands that memory back to the kernel after every batch
// and faults it in again on the next one; keep it instead.
bool tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
  mallopt(M_MMAP_THRESHOLD, 64 * 1024 * 1024);
  mallopt(M_TOP_PAD, 64 * 1024 * 1024);
#endif
  return true;
}

[[maybe_unused]] const bool allocator_tuned = tune_allocator();

}  // namespace

// ---------------------------------------------------------------------------
// ParamLayout / ParamVector

std::size_t ParamLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("slice '" + name + "' has empty shape");
  for (const auto& s : slices_) {
    if (s.name == name) throw std::invalid_argument("duplicate slice name '" + name + "'");
  }
  slices_.push_back(Slice{std::move(name), rows, cols, total_});
  total_ += slices_.back().size();
  return slices_.size() - 1;
}

std::size_t ParamLayout::find(const std::string& name) const {
  for (std::size_t k = 0; k < slices_.size(); ++k) {
    if (slices_[k].name == name) return k;
  }
  throw std::out_of_range("no slice named '" + name + "'");
}

ParamVector::ParamVector(ParamLayout layout)
    : layout_(std::move(layout)), values_(layout_.total(), 0.0) {}

std::span<double> ParamVector::slice(std::size_t k) {
  const Slice& s = layout_.slice(k);
  return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ParamVector::slice(std::size_t k) const {
  const Slice& s = layout_.slice(k);
  return std::span<const double>(values_).subspan(s.offset, s.size());
}

Eigen::Map<RowMajorMatrix> ParamVector::matrix(std::size_t k) {
  const Slice& s = layout_.slice(k);
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const RowMajorMatrix> ParamVector::matrix(std::size_t k) const {
  const Slice& s = layout_.slice(k);
  return {values_.data() + s.offset, s.rows, s.cols};
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string ParamVector::first_non_finite_slice() const {
  for (std::size_t k = 0; k < layout_.slices().size(); ++k) {
    for (double v : slice(k)) {
      if (!std::isfinite(v)) return layout_.slice(k).name;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Var

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("use of an unbound Var");
  return tape_->value_of(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("Var::scalar on a non-scalar");
  return v(0, 0);
}

// ---------------------------------------------------------------------------
// Broadcasting helpers

namespace {

Eigen::Index broadcast_dim(Eigen::Index a, Eigen::Index b) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw std::invalid_argument("incompatible shapes for elementwise op");
}

// out(i, j) = f(a(i or 0, j or 0), b(i or 0, j or 0)); operands with a size-1
// axis repeat along it. Inner loop runs down contiguous columns.
template <bool RowStepA, bool RowStepB, typename F>
void broadcast_loop(const Matrix& a, const Matrix& b, Matrix& out, F&& f) {
  const Eigen::Index rows = out.rows();
  const bool col_step_a = a.cols() != 1;
  const bool col_step_b = b.cols() != 1;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double* pa = a.data() + (col_step_a ? j * a.rows() : 0);
    const double* pb = b.data() + (col_step_b ? j * b.rows() : 0);
    double* po = out.data() + j * rows;
    for (Eigen::Index i = 0; i < rows; ++i) {
      po[i] = f(pa[RowStepA ? i : 0], pb[RowStepB ? i : 0]);
    }
  }
}

template <typename F>
Matrix broadcast_apply(const Matrix& a, const Matrix& b, F&& f) {
  Matrix out(broadcast_dim(a.rows(), b.rows()), broadcast_dim(a.cols(), b.cols()));
  const Eigen::Index total = out.size();
  double* po = out.data();
  const double* pa = a.data();
  const double* pb = b.data();
  // Flat paths for equal shapes and scalar operands.
  if (a.size() == total && b.size() == total) {
    for (Eigen::Index i = 0; i < total; ++i) po[i] = f(pa[i], pb[i]);
    return out;
  }
  if (b.size() == 1 && a.size() == total) {
    const double y = pb[0];
    for (Eigen::Index i = 0; i < total; ++i) po[i] = f(pa[i], y);
    return out;
  }
  if (a.size() == 1 && b.size() == total) {
    const double x = pa[0];
    for (Eigen::Index i = 0; i < total; ++i) po[i] = f(x, pb[i]);
    return out;
  }
  const bool ra = a.rows() != 1 || out.rows() == 1;
  const bool rb = b.rows() != 1 || out.rows() == 1;
  if (ra && rb) {
    broadcast_loop<true, true>(a, b, out, f);
  } else if (ra) {
    broadcast_loop<true, false>(a, b, out, f);
  } else if (rb) {
    broadcast_loop<false, true>(a, b, out, f);
  } else {
    broadcast_loop<false, false>(a, b, out, f);
  }
  return out;
}

// dst.middleRows(first, src.rows()) = src, one contiguous copy per column.
void put_rows(const Matrix& src, Matrix& dst, Eigen::Index first) {
  const Eigen::Index n = src.rows();
  for (Eigen::Index j = 0; j < src.cols(); ++j) {
    std::copy_n(src.data() + j * n, n, dst.data() + j * dst.rows() + first);
  }
}

// src.middleRows(first, count) as a new matrix.
Matrix take_rows(const Matrix& src, Eigen::Index first, Eigen::Index count) {
  Matrix out(count, src.cols());
  for (Eigen::Index j = 0; j < src.cols(); ++j) {
    std::copy_n(src.data() + j * src.rows() + first, count, out.data() + j * count);
  }
  return out;
}

Matrix reduce_to(Matrix g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && g.rows() != 1) g = g.colwise().sum().eval();
  if (cols == 1 && g.cols() != 1) g = g.rowwise().sum().eval();
  return g;
}

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw std::invalid_argument("operands live on different tapes");
  }
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw std::invalid_argument("use of an unbound Var");
  return *a.tape();
}

Matrix sigmoid_of(const Matrix& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

Var Tape::record(Op op, Matrix value, int lhs, int rhs, double constant, Eigen::Index aux) {
  Node node;
  node.op = op;
  node.lhs = lhs;
  node.rhs = rhs;
  node.constant = constant;
  node.aux = aux;
  node.value = std::move(value);
  node.requires_grad = (lhs >= 0 && nodes_[static_cast<std::size_t>(lhs)].requires_grad) ||
                       (rhs >= 0 && nodes_[static_cast<std::size_t>(rhs)].requires_grad);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) { return record(Op::leaf, std::move(value), -1); }

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::variable(Matrix value) {
  Var v = record(Op::leaf, std::move(value), -1);
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::parameter(const ParamVector& params, std::size_t k) {
  Var v = variable(Matrix(params.matrix(k)));
  nodes_.back().param_slice = static_cast<int>(k);
  return v;
}

void Tape::accumulate(int id, Matrix g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = std::move(g);
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("loss belongs to another tape");
  const Matrix& lv = value_of(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("backward requires a scalar (1x1) loss");
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  last_visits_ = 0;
  Node& root = nodes_[static_cast<std::size_t>(loss.id())];
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (int id = loss.id(); id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    ++last_visits_;
    if (n.op != Op::leaf) propagate(n);
  }
}

void Tape::propagate(const Node& n) {
  const Matrix& g = n.grad;
  auto val = [&](int id) -> const Matrix& { return value_of(id); };
  auto wants = [&](int id) { return id >= 0 && nodes_[static_cast<std::size_t>(id)].requires_grad; };

  switch (n.op) {
    case Op::leaf:
      break;
    case Op::add:
    case Op::sub: {
      if (wants(n.lhs)) accumulate(n.lhs, reduce_to(g, val(n.lhs).rows(), val(n.lhs).cols()));
      if (wants(n.rhs)) {
        Matrix r = reduce_to(g, val(n.rhs).rows(), val(n.rhs).cols());
        if (n.op == Op::sub) r = -r;
        accumulate(n.rhs, std::move(r));
      }
      break;
    }
    case Op::mul: {
      const Matrix& a = val(n.lhs);
      const Matrix& b = val(n.rhs);
      auto times = [](double x, double y) { return x * y; };
      if (wants(n.lhs)) accumulate(n.lhs, reduce_to(broadcast_apply(g, b, times), a.rows(), a.cols()));
      if (wants(n.rhs)) accumulate(n.rhs, reduce_to(broadcast_apply(g, a, times), b.rows(), b.cols()));
      break;
    }
    case Op::div: {
      const Matrix& a = val(n.lhs);
      const Matrix& b = val(n.rhs);
      if (wants(n.lhs)) {
        Matrix ga = broadcast_apply(g, b, [](double x, double y) { return x / y; });
        accumulate(n.lhs, reduce_to(std::move(ga), a.rows(), a.cols()));
      }
      if (wants(n.rhs)) {
        // d(a/b)/db = -(a/b)/b
        Matrix q = g.cwiseProduct(n.value);
        Matrix gb = broadcast_apply(q, b, [](double x, double y) { return -x / y; });
        accumulate(n.rhs, reduce_to(std::move(gb), b.rows(), b.cols()));
      }
      break;
    }
    case Op::neg:
      accumulate(n.lhs, -g);
      break;
    case Op::exp:
      accumulate(n.lhs, g.cwiseProduct(n.value));
      break;
    case Op::log:
      accumulate(n.lhs, g.cwiseQuotient(val(n.lhs)));
      break;
    case Op::sin:
      accumulate(n.lhs, g.cwiseProduct(val(n.lhs).array().cos().matrix()));
      break;
    case Op::cos:
      accumulate(n.lhs, -g.cwiseProduct(val(n.lhs).array().sin().matrix()));
      break;
    case Op::scale:
      accumulate(n.lhs, g * n.constant);
      break;
    case Op::relu: {
      // relu output is positive exactly where the input is.
      Matrix ga(g.rows(), g.cols());
      const double* po = n.value.data();
      const double* pg = g.data();
      double* out = ga.data();
      for (Eigen::Index i = 0; i < ga.size(); ++i) out[i] = po[i] > 0.0 ? pg[i] : 0.0;
      accumulate(n.lhs, std::move(ga));
      break;
    }
    case Op::softplus:
      accumulate(n.lhs, g.cwiseProduct(sigmoid_of(val(n.lhs))));
      break;
    case Op::sigmoid:
      accumulate(n.lhs, (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
      break;
    case Op::matvec: {
      const Matrix& w = val(n.lhs);
      const Matrix& x = val(n.rhs);
      if (wants(n.lhs)) {
        Matrix gw(w.rows(), w.cols());
        gw.noalias() = g * x.transpose();
        accumulate(n.lhs, std::move(gw));
      }
      if (wants(n.rhs)) {
        Matrix gx(x.rows(), x.cols());
        gx.noalias() = w.transpose() * g;
        accumulate(n.rhs, std::move(gx));
      }
      break;
    }
    case Op::sum: {
      const Matrix& a = val(n.lhs);
      accumulate(n.lhs, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
      break;
    }
    case Op::squared_norm:
      accumulate(n.lhs, val(n.lhs) * (2.0 * g(0, 0)));
      break;
    case Op::concat_rows: {
      const Eigen::Index top = val(n.lhs).rows();
      if (wants(n.lhs)) accumulate(n.lhs, take_rows(g, 0, top));
      if (wants(n.rhs)) accumulate(n.rhs, take_rows(g, top, g.rows() - top));
      break;
    }
    case Op::row_block: {
      const Matrix& a = val(n.lhs);
      Matrix ga = Matrix::Zero(a.rows(), a.cols());
      put_rows(g, ga, n.aux);
      accumulate(n.lhs, std::move(ga));
      break;
    }
    case Op::segment_sum:
    case Op::repeat_cols: {
      // Both are adjoint to each other: the gradient of one is the other.
      const Matrix& a = val(n.lhs);
      const Eigen::Index seg = n.aux;
      Matrix ga(a.rows(), a.cols());
      if (n.op == Op::segment_sum) {
        for (Eigen::Index s = 0; s < g.cols(); ++s) {
          for (Eigen::Index j = 0; j < seg; ++j) ga.col(s * seg + j) = g.col(s);
        }
      } else {
        for (Eigen::Index s = 0; s < a.cols(); ++s) {
          ga.col(s) = g.middleCols(s * seg, seg).rowwise().sum();
        }
      }
      accumulate(n.lhs, std::move(ga));
      break;
    }
    case Op::segment_exclusive_cumsum: {
      // out_i = sum_{j<i} a_j  =>  da_j = sum_{i>j} g_i
      const Eigen::Index seg = n.aux;
      Matrix ga(g.rows(), g.cols());
      for (Eigen::Index s = 0; s < g.cols() / seg; ++s) {
        Eigen::VectorXd running = Eigen::VectorXd::Zero(g.rows());
        for (Eigen::Index j = seg - 1; j >= 0; --j) {
          const Eigen::Index c = s * seg + j;
          ga.col(c) = running;
          running += g.col(c);
        }
      }
      accumulate(n.lhs, std::move(ga));
      break;
    }
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id()));
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

ParamVector Tape::parameter_gradient(const ParamLayout& layout) const {
  ParamVector out(layout);
  accumulate_parameter_gradient(out);
  return out;
}

void Tape::accumulate_parameter_gradient(ParamVector& out) const {
  for (const Node& n : nodes_) {
    if (n.param_slice < 0 || n.grad.size() == 0) continue;
    auto target = out.matrix(static_cast<std::size_t>(n.param_slice));
    if (target.rows() != n.grad.rows() || target.cols() != n.grad.cols()) {
      throw std::invalid_argument("gradient layout does not match the bound parameters");
    }
    target += n.grad;
  }
}

// ---------------------------------------------------------------------------
// Primitives

namespace {

template <typename F>
Var binary(Op op, Var a, Var b, F&& f) {
  Tape& t = same_tape(a, b);
  return t.record(op, broadcast_apply(a.value(), b.value(), f), a.id(), b.id());
}

}  // namespace

Var add(Var a, Var b) {
  return binary(Op::add, a, b, [](double x, double y) { return x + y; });
}

Var sub(Var a, Var b) {
  return binary(Op::sub, a, b, [](double x, double y) { return x - y; });
}

Var mul(Var a, Var b) {
  return binary(Op::mul, a, b, [](double x, double y) { return x * y; });
}

Var div(Var a, Var b) {
  if ((b.value().array() == 0.0).any()) throw std::domain_error("division by zero");
  return binary(Op::div, a, b, [](double x, double y) { return x / y; });
}

Var neg(Var a) { return tape_of(a).record(Op::neg, -a.value(), a.id()); }

Var exp(Var a) { return tape_of(a).record(Op::exp, a.value().array().exp().matrix(), a.id()); }

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw std::domain_error("log of a non-positive value");
  return tape_of(a).record(Op::log, a.value().array().log().matrix(), a.id());
}

Var sin(Var a) { return tape_of(a).record(Op::sin, a.value().array().sin().matrix(), a.id()); }

Var cos(Var a) { return tape_of(a).record(Op::cos, a.value().array().cos().matrix(), a.id()); }

Var scale(Var a, double factor) {
  return tape_of(a).record(Op::scale, a.value() * factor, a.id(), -1, factor);
}

Var relu(Var a) { return tape_of(a).record(Op::relu, a.value().cwiseMax(0.0), a.id()); }

Var softplus(Var a) {
  // max(x, 0) + log1p(exp(-|x|)) stays finite for large |x|.
  Matrix out = a.value().unaryExpr(
      [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
  return tape_of(a).record(Op::softplus, std::move(out), a.id());
}

Var sigmoid(Var a) { return tape_of(a).record(Op::sigmoid, sigmoid_of(a.value()), a.id()); }

Var matvec(Var weights, Var x) {
  Tape& t = same_tape(weights, x);
  if (weights.cols() != x.rows()) throw std::invalid_argument("matvec: inner dimensions differ");
  Matrix out(weights.rows(), x.cols());
  out.noalias() = weights.value() * x.value();
  return t.record(Op::matvec, std::move(out), weights.id(), x.id());
}

Var sum(Var a) {
  return tape_of(a).record(Op::sum, Matrix::Constant(1, 1, a.value().sum()), a.id());
}

Var squared_norm(Var a) {
  return tape_of(a).record(Op::squared_norm, Matrix::Constant(1, 1, a.value().squaredNorm()),
                           a.id());
}

Var concat_rows(Var top, Var bottom) {
  Tape& t = same_tape(top, bottom);
  if (top.cols() != bottom.cols()) throw std::invalid_argument("concat_rows: lane counts differ");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  put_rows(top.value(), out, 0);
  put_rows(bottom.value(), out, top.rows());
  return t.record(Op::concat_rows, std::move(out), top.id(), bottom.id());
}

Var row_block(Var a, Eigen::Index first_row, Eigen::Index count) {
  if (first_row < 0 || count < 1 || first_row + count > a.rows()) {
    throw std::invalid_argument("row_block out of range");
  }
  return tape_of(a).record(Op::row_block, take_rows(a.value(), first_row, count), a.id(), -1, 0.0,
                           first_row);
}

Var segment_sum(Var a, Eigen::Index segment) {
  if (segment < 1 || a.cols() % segment != 0) {
    throw std::invalid_argument("segment_sum: lane count not a multiple of segment");
  }
  const Matrix& v = a.value();
  Matrix out(v.rows(), v.cols() / segment);
  for (Eigen::Index s = 0; s < out.cols(); ++s) {
    out.col(s) = v.middleCols(s * segment, segment).rowwise().sum();
  }
  return tape_of(a).record(Op::segment_sum, std::move(out), a.id(), -1, 0.0, segment);
}

Var segment_exclusive_cumsum(Var a, Eigen::Index segment) {
  if (segment < 1 || a.cols() % segment != 0) {
    throw std::invalid_argument("segment_exclusive_cumsum: lane count not a multiple of segment");
  }
  const Matrix& v = a.value();
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index s = 0; s < v.cols() / segment; ++s) {
    Eigen::VectorXd running = Eigen::VectorXd::Zero(v.rows());
    for (Eigen::Index j = 0; j < segment; ++j) {
      const Eigen::Index c = s * segment + j;
      out.col(c) = running;
      running += v.col(c);
    }
  }
  return tape_of(a).record(Op::segment_exclusive_cumsum, std::move(out), a.id(), -1, 0.0, segment);
}

Var repeat_cols(Var a, Eigen::Index times) {
  if (times < 1) throw std::invalid_argument("repeat_cols: times must be >= 1");
  const Matrix& v = a.value();
  Matrix out(v.rows(), v.cols() * times);
  for (Eigen::Index s = 0; s < v.cols(); ++s) {
    for (Eigen::Index j = 0; j < times; ++j) out.col(s * times + j) = v.col(s);
  }
  return tape_of(a).record(Op::repeat_cols, std::move(out), a.id(), -1, 0.0, times);
}

Var operator+(Var a, double c) { return add(a, tape_of(a).constant(c)); }
Var operator+(double c, Var a) { return add(tape_of(a).constant(c), a); }
Var operator-(double c, Var a) { return sub(tape_of(a).constant(c), a); }
Var operator-(Var a, double c) { return sub(a, tape_of(a).constant(c)); }
Var operator*(double c, Var a) { return scale(a, c); }
Var operator*(Var a, double c) { return scale(a, c); }

// ---------------------------------------------------------------------------
// Finite differences

double central_difference_error(const std::function<double(const ParamVector&)>& f,
                                const ParamVector& analytic_gradient, const ParamVector& params,
                                double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  if (analytic_gradient.size() != params.size()) {
    throw std::invalid_argument("gradient and parameter sizes differ");
  }
  ParamVector probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + step;
    const double up = f(probe);
    probe[i] = original - step;
    const double down = f(probe);
    probe[i] = original;
    const double central = (up - down) / (2.0 * step);
    const double analytic = analytic_gradient[i];
    const double denom = std::max({std::abs(analytic), std::abs(central), 1e-8});
    worst = std::max(worst, std::abs(analytic - central) / denom);
  }
  return worst;
}

double finite_difference_check(const std::function<Var(Tape&, const ParamVector&)>& f,
                               const ParamVector& params, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  Tape tape;
  Var loss = f(tape, params);
  tape.backward(loss);
  const ParamVector analytic = tape.parameter_gradient(params.layout());
  auto scalar = [&](const ParamVector& p) {
    Tape t;
    return f(t, p).scalar();
  };
  return central_difference_error(scalar, analytic, params, step);
}

}  // namespace dropfield::ad
