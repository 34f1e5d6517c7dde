// Copyright 2026 The slap-cpp Authors
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

#include "slap/autodiff.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "slap/errors.hpp"

namespace slap::ad {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw InvalidArgument(std::string("autodiff: ") + what);
}

Tape& tape_of(Var v) {
  require(v.valid(), "use of an empty Var");
  return *v.tape();
}

}  // namespace

Var Tape::constant(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(Parameter& p) {
  Node& n = nodes_.emplace_back();
  n.value = p.value;
  n.param = &p;
  n.needs_grad = recording_;
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, Backprop fn) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::push(Matrix value, std::span<const Var> inputs, Backprop fn) {
  bool needs = false;
  if (recording_) {
    for (const Var& v : inputs) {
      require(v.tape() == this, "mixing vars from different tapes");
      needs = needs || nodes_[v.id()].needs_grad;
    }
  }
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.needs_grad = needs;
  if (needs) n.backprop = std::move(fn);
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  require(recording_, "backward() on a non-recording tape");
  require(loss.tape() == this, "loss belongs to another tape");
  require(loss.rows() == 1 && loss.cols() == 1, "backward() needs a 1x1 loss");
  if (!nodes_[loss.id()].needs_grad) return;
  grad(loss.id())(0, 0) += 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param != nullptr) {
      if (n.param->grad.size() == 0) n.param->zero_grad();
      n.param->grad += n.grad;
    } else if (n.backprop) {
      n.backprop(*this, i);
    }
  }
}

std::size_t Tape::bytes() const {
  std::size_t total = 0;
  for (const Node& n : nodes_) total += sizeof(double) * static_cast<std::size_t>(n.value.size() + n.grad.size());
  return total;
}

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul shape mismatch");
  Tape& t = tape_of(a);
  Matrix out = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad(ia).noalias() += g * t.value(ib).transpose();
    if (t.needs_grad(ib)) t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var matmul_nt(Var a, Var b) {
  require(a.cols() == b.cols(), "matmul_nt shape mismatch");
  Tape& t = tape_of(a);
  Matrix out = a.value() * b.value().transpose();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad(ia).noalias() += g * t.value(ib);
    if (t.needs_grad(ib)) t.grad(ib).noalias() += g.transpose() * t.value(ia);
  });
}

Var add(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add shape mismatch");
  Tape& t = tape_of(a);
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape mismatch");
  Tape& t = tape_of(a);
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, -t.grad(self));
  });
}

Var mul(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul shape mismatch");
  Tape& t = tape_of(a);
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(a.value() * s, {a}, [ia, s](Tape& t, int self) { t.accumulate(ia, t.grad(self) * s); });
}

Var add_const(Var a, double c) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push((a.value().array() + c).matrix(), {a},
                [ia](Tape& t, int self) { t.accumulate(ia, t.grad(self)); });
}

Var add_row(Var x, Var row) {
  require(row.rows() == 1 && row.cols() == x.cols(), "add_row shape mismatch");
  Tape& t = tape_of(x);
  Matrix out = x.value();
  out.rowwise() += row.value().row(0);
  const int ix = x.id(), ir = row.id();
  return t.push(std::move(out), {x, row}, [ix, ir](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.accumulate(ix, g);
    t.accumulate(ir, g.colwise().sum());
  });
}

Var affine(Var x, Var weight, Var bias) {
  require(x.cols() == weight.rows(), "affine shape mismatch");
  require(bias.rows() == 1 && bias.cols() == weight.cols(), "affine bias shape mismatch");
  Tape& t = tape_of(x);
  Matrix out(x.rows(), weight.cols());
  out.noalias() = x.value() * weight.value();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id(), iw = weight.id(), ib = bias.id();
  return t.push(std::move(out), {x, weight, bias}, [ix, iw, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ix)) t.grad(ix).noalias() += g * t.value(iw).transpose();
    if (t.needs_grad(iw)) t.grad(iw).noalias() += t.value(ix).transpose() * g;
    t.accumulate(ib, g.colwise().sum());
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(Var x) {
  Tape& t = tape_of(x);
  const auto v = x.value().array();
  // tanh(u) = 1 - 2 / (exp(2u) + 1); the vectorized exp is much faster than tanh.
  const Matrix th = (1.0 - 2.0 / ((2.0 * kGeluC * (v + kGeluA * v.cube())).exp() + 1.0)).matrix();
  Matrix out = (0.5 * v * (1.0 + th.array())).matrix();
  Matrix d;
  if (t.recording()) {
    d = (0.5 * (1.0 + th.array()) +
         0.5 * v * (1.0 - th.array().square()) * kGeluC * (1.0 + 3.0 * kGeluA * v.square()))
            .matrix();
  }
  const int ix = x.id();
  return t.push(std::move(out), {x}, [ix, d = std::move(d)](Tape& t, int self) {
    t.accumulate(ix, t.grad(self).cwiseProduct(d));
  });
}

Var sigmoid(Var x) {
  Tape& t = tape_of(x);
  Matrix out = x.value().unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  const int ix = x.id();
  return t.push(std::move(out), {x}, [ix](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.accumulate(ix, t.grad(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Eigen::Index n = x.rows(), c = x.cols();
  require(gamma.rows() == 1 && gamma.cols() == c && beta.rows() == 1 && beta.cols() == c,
          "layer_norm parameter shape mismatch");
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Matrix xhat(n, c);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std[r];
  }
  Matrix out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return t.push(std::move(out), {x, gamma, beta},
                [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                  t.accumulate(ib, g.colwise().sum());
                  if (!t.needs_grad(ix)) return;
                  Matrix dxhat = g;
                  dxhat.array().rowwise() *= t.value(ig).row(0).array();
                  Matrix& gx = t.grad(ix);
                  const double inv_c = 1.0 / static_cast<double>(g.cols());
                  for (Eigen::Index r = 0; r < g.rows(); ++r) {
                    const double m1 = dxhat.row(r).sum() * inv_c;
                    const double m2 = dxhat.row(r).dot(xhat.row(r)) * inv_c;
                    gx.row(r).array() += inv_std[r] * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                  }
                });
}

Var softmax_rows(Var x) {
  Tape& t = tape_of(x);
  Matrix out = x.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  const int ix = x.id();
  return t.push(std::move(out), {x}, [ix](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    Matrix d = g;
    d.colwise() -= dots;
    t.grad(ix) += d.cwiseProduct(y);
  });
}

Var normalize_rows(Var x) {
  Tape& t = tape_of(x);
  Eigen::VectorXd norms = x.value().rowwise().norm();
  for (Eigen::Index r = 0; r < norms.size(); ++r) {
    // Non-finite rows propagate so the caller's loss check reports them.
    if (norms[r] == 0.0) throw InvalidArgument("normalize_rows: zero row");
  }
  Matrix out = x.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= norms[r];
  const int ix = x.id();
  return t.push(std::move(out), {x}, [ix, norms = std::move(norms)](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad(ix);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double d = y.row(r).dot(g.row(r));
      gx.row(r) += (g.row(r) - d * y.row(r)) / norms[r];
    }
  });
}

Var gather_rows(Var x, std::span<const int> index) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Matrix out(static_cast<Eigen::Index>(index.size()), xv.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    require(index[k] >= 0 && index[k] < xv.rows(), "gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(k)) = xv.row(index[k]);
  }
  const int ix = x.id();
  return t.push(std::move(out), {x}, [ix, idx = std::vector<int>(index.begin(), index.end())](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad(ix);
    for (std::size_t k = 0; k < idx.size(); ++k) gx.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
  });
}

Var segment_max(Var x, std::span<const int> offsets) {
  require(!offsets.empty() && offsets.back() == x.rows(), "segment_max offsets must end at row count");
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  const Eigen::Index segments = static_cast<Eigen::Index>(offsets.size()) - 1;
  const Eigen::Index c = xv.cols();
  Matrix out = Matrix::Zero(segments, c);
  std::vector<int> arg(static_cast<std::size_t>(segments * c), -1);
  for (Eigen::Index s = 0; s < segments; ++s) {
    const int begin = offsets[s], end = offsets[s + 1];
    require(begin <= end, "segment_max offsets must be nondecreasing");
    if (begin == end) continue;
    for (Eigen::Index j = 0; j < c; ++j) {
      int best = begin;
      for (int r = begin + 1; r < end; ++r) {
        if (xv(r, j) > xv(best, j)) best = r;
      }
      out(s, j) = xv(best, j);
      arg[static_cast<std::size_t>(s * c + j)] = best;
    }
  }
  const int ix = x.id();
  return t.push(std::move(out), {x}, [ix, arg = std::move(arg), c](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad(ix);
    for (Eigen::Index s = 0; s < g.rows(); ++s) {
      for (Eigen::Index j = 0; j < c; ++j) {
        const int r = arg[static_cast<std::size_t>(s * c + j)];
        if (r >= 0) gx(r, j) += g(s, j);
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols of nothing");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index n = parts[0].rows();
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    require(p.rows() == n, "concat_cols row mismatch");
    c += p.cols();
  }
  Matrix out(n, c);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    layout.emplace_back(p.id(), at);
    at += p.cols();
  }
  return t.push(std::move(out), parts, [layout = std::move(layout)](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    for (const auto& [id, offset] : layout) {
      if (t.needs_grad(id)) t.grad(id) += g.middleCols(offset, t.value(id).cols());
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows of nothing");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index c = parts[0].cols();
  Eigen::Index n = 0;
  for (const Var& p : parts) {
    require(p.cols() == c, "concat_rows column mismatch");
    n += p.rows();
  }
  Matrix out(n, c);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    layout.emplace_back(p.id(), at);
    at += p.rows();
  }
  return t.push(std::move(out), parts, [layout = std::move(layout)](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    for (const auto& [id, offset] : layout) {
      if (t.needs_grad(id)) t.grad(id) += g.middleRows(offset, t.value(id).rows());
    }
  });
}

Var slice_rows(Var x, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= x.rows(), "slice_rows out of range");
  Tape& t = tape_of(x);
  const int ix = x.id();
  return t.push(x.value().middleRows(begin, count), {x}, [ix, begin, count](Tape& t, int self) {
    if (t.needs_grad(ix)) t.grad(ix).middleRows(begin, count) += t.grad(self);
  });
}

Var slice_cols(Var x, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= x.cols(), "slice_cols out of range");
  Tape& t = tape_of(x);
  const int ix = x.id();
  return t.push(x.value().middleCols(begin, count), {x}, [ix, begin, count](Tape& t, int self) {
    if (t.needs_grad(ix)) t.grad(ix).middleCols(begin, count) += t.grad(self);
  });
}

Var mean_rows(Var x) {
  require(x.rows() > 0, "mean_rows of an empty matrix");
  Tape& t = tape_of(x);
  const int ix = x.id();
  const double inv = 1.0 / static_cast<double>(x.rows());
  return t.push(x.value().colwise().mean(), {x}, [ix, inv](Tape& t, int self) {
    if (t.needs_grad(ix)) t.grad(ix).rowwise() += t.grad(self).row(0) * inv;
  });
}

Var sum_all(Var x) {
  Tape& t = tape_of(x);
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  const int ix = x.id();
  return t.push(std::move(out), {x}, [ix](Tape& t, int self) {
    if (t.needs_grad(ix)) t.grad(ix).array() += t.grad(self)(0, 0);
  });
}

Var bce_with_logits(Var logit, double target) {
  require(logit.rows() == 1 && logit.cols() == 1, "bce_with_logits expects a 1x1 logit");
  Tape& t = tape_of(logit);
  const double z = logit.scalar();
  // log(1 + exp(z)) - target * z, evaluated stably.
  const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  Matrix out(1, 1);
  out(0, 0) = softplus - target * z;
  const int il = logit.id();
  return t.push(std::move(out), {logit}, [il, target](Tape& t, int self) {
    const double z = t.value(il)(0, 0);
    const double p = 1.0 / (1.0 + std::exp(-z));
    t.accumulate(il, Matrix::Constant(1, 1, t.grad(self)(0, 0) * (p - target)));
  });
}

}  // namespace slap::ad
