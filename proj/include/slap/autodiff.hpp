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

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records every operation of one forward pass; backward()
// replays the records in reverse and accumulates gradients into the
// Parameters that were read.
//
// Rows index items (tokens, points, neighbors), columns index features.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace slap::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to one recorded value. Cheap to copy; valid while its Tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// `self` is the id of the node being back-propagated.
  using Backprop = std::function<void(Tape&, int self)>;

  /// With record_gradients = false the tape only evaluates; backward() is
  /// then unavailable.
  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& p);

  /// Records an operation result. `inputs` decide whether a gradient is
  /// needed; `fn` is stored only in that case.
  Var push(Matrix value, std::initializer_list<Var> inputs, Backprop fn);
  Var push(Matrix value, std::span<const Var> inputs, Backprop fn);

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  /// Gradient buffer of a node, zero-initialized on first access.
  Matrix& grad(int id);
  bool has_grad(int id) const { return nodes_[id].grad.size() > 0; }

  template <typename Expr>
  void accumulate(int id, const Expr& g) {
    if (needs_grad(id)) grad(id) += g;
  }

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 `loss` and back-propagates into
  /// every Parameter read on this tape (gradients are added, not assigned).
  void backward(Var loss);

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }
  /// Bytes held by recorded values and gradient buffers.
  std::size_t bytes() const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backprop backprop;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::deque<Node> nodes_;
  bool recording_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// Linear algebra.
Var matmul(Var a, Var b);     // a * b
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // element-wise
Var scale(Var a, double s);
Var add_const(Var a, double c);
Var add_row(Var x, Var row);  // broadcasts a 1xC row over every row of x
Var affine(Var x, Var weight, Var bias);  // x * weight + bias row

// Element-wise nonlinearities.
Var gelu(Var x);  // tanh approximation
Var sigmoid(Var x);

// Row-wise normalizations.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var softmax_rows(Var x);
Var normalize_rows(Var x);

// Structure.
Var gather_rows(Var x, std::span<const int> index);
/// Max over row segments [offsets[s], offsets[s+1]); empty segments give zeros.
Var segment_max(Var x, std::span<const int> offsets);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var x, Eigen::Index begin, Eigen::Index count);
Var slice_cols(Var x, Eigen::Index begin, Eigen::Index count);
Var mean_rows(Var x);
Var sum_all(Var x);

// Fused losses (1x1 results).
/// Binary cross-entropy of a 1x1 logit against target in {0, 1}.
Var bce_with_logits(Var logit, double target);

}  // namespace slap::ad
