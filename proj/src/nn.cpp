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

#include "slap/nn.hpp"

#include <cmath>

#include "slap/errors.hpp"

namespace slap::nn {

Parameter& ParameterStore::create(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (index_.count(name) != 0) throw InvalidArgument("duplicate parameter name: " + name);
  index_[name] = params_.size();
  Parameter& p = params_.emplace_back();
  p.name = name;
  p.value = Matrix::Zero(rows, cols);
  p.grad = Matrix::Zero(rows, cols);
  return p;
}

Parameter* ParameterStore::find(const std::string& name) {
  const auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParameterStore::find(const std::string& name) const {
  const auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::vector<Matrix> ParameterStore::values() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterStore::set_values(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw InvalidArgument("set_values: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].rows() != params_[i].value.rows() || values[i].cols() != params_[i].value.cols()) {
      throw InvalidArgument("set_values: shape mismatch for " + params_[i].name);
    }
    params_[i].value = values[i];
  }
}

void init_glorot(Parameter& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = uniform(rng, -limit, limit);
}

void init_normal(Parameter& p, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = gaussian(rng, stddev);
}

Linear::Linear(ParameterStore& store, const std::string& name, int in, int out, Rng& rng)
    : w_(&store.create(name + ".weight", in, out)), b_(&store.create(name + ".bias", 1, out)), in_(in), out_(out) {
  init_glorot(*w_, rng);
}

Var Linear::forward(Tape& tape, Var x) const {
  return ad::affine(x, tape.parameter(*w_), tape.parameter(*b_));
}

Mlp::Mlp(ParameterStore& store, const std::string& name, int in, const std::vector<int>& widths,
         bool activate_last, Rng& rng)
    : activate_last_(activate_last) {
  int prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    layers_.emplace_back(store, name + "." + std::to_string(i), prev, widths[i], rng);
    prev = widths[i];
  }
}

Var Mlp::forward(Tape& tape, Var x) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(tape, x);
    if (i + 1 < layers_.size() || activate_last_) x = ad::gelu(x);
  }
  return x;
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, int dim)
    : gamma_(&store.create(name + ".gamma", 1, dim)), beta_(&store.create(name + ".beta", 1, dim)) {
  gamma_->value.setOnes();
}

Var LayerNorm::forward(Tape& tape, Var x) const {
  return ad::layer_norm(x, tape.parameter(*gamma_), tape.parameter(*beta_));
}

Adam::Adam(const ParameterStore& store, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& p : store.all()) {
    state_.m.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    state_.v.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void Adam::step(ParameterStore& store) {
  auto& params = store.all();
  if (params.size() != state_.m.size()) throw InvalidArgument("Adam: parameter store changed shape");
  ++state_.step;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(state_.step));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(state_.step));
  const double lr = cfg_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (p.grad.size() == 0) continue;
    Matrix& m = state_.m[i];
    Matrix& v = state_.v[i];
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * p.grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.epsilon);
  }
}

}  // namespace slap::nn
