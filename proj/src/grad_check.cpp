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


#include "slap/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>

#include "slap/apm.hpp"
#include "slap/backbone.hpp"
#include "slap/encoder.hpp"
#include "slap/errors.hpp"
#include "slap/ipm.hpp"
#include "slap/random.hpp"

namespace slap {

using ad::Matrix;
using ad::Tape;
using ad::Var;

GradCheckReport check_gradients(nn::ParameterStore& store, const LossBuilder& loss, double tolerance,
                                const GradCheckOptions& options) {
  store.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  if (options.corrupt) options.corrupt(store);
  auto evaluate = [&]() {
    Tape tape(false);
    return loss(tape).scalar();
  };
  GradCheckReport report;
  report.passed = true;
  Rng rng(options.seed);
  for (auto& p : store.all()) {
    std::vector<Eigen::Index> entries(static_cast<std::size_t>(p.value.size()));
    std::iota(entries.begin(), entries.end(), Eigen::Index{0});
    if (options.max_entries_per_parameter > 0 && entries.size() > options.max_entries_per_parameter) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_parameter);
      std::sort(entries.begin(), entries.end());
    }
    for (Eigen::Index e : entries) {
      double& x = p.value.data()[e];
      const double saved = x;
      x = saved + options.step;
      const double up = evaluate();
      x = saved - options.step;
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = p.grad.data()[e];
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), options.floor});
      ++report.entries_checked;
      const double score = std::isfinite(rel) ? rel : INFINITY;
      if (report.worst_index < 0 || score > report.max_relative_error) {
        report.max_relative_error = score;
        report.worst_parameter = p.name;
        report.worst_index = e;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gaussian(rng, scale);
  return m;
}

PointCloud random_cloud(Rng& rng, int n, double extent) {
  PointCloud c;
  for (int i = 0; i < n; ++i) {
    c.push_back(Vec3(uniform(rng, 0, extent), uniform(rng, 0, extent), uniform(rng, 0, extent)),
                Vec3(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)));
  }
  c.source_view.clear();
  return c;
}

// Scalar probe of a matrix output: sum(out .* R) for a fixed random R.
Var probe(Tape& tape, Var out, const Matrix& r) { return ad::sum_all(ad::mul(out, tape.constant(r))); }

// One registered instance: owns its parameters and inputs.
struct Instance {
  std::unique_ptr<nn::ParameterStore> owned;
  nn::ParameterStore* store = nullptr;
  LossBuilder loss;
  std::shared_ptr<void> keep;  // models referenced by `loss`
};

Instance with_store(std::unique_ptr<nn::ParameterStore> s) {
  Instance inst;
  inst.store = s.get();
  inst.owned = std::move(s);
  return inst;
}

Instance make_linear(int n, Rng& rng) {
  auto inst = with_store(std::make_unique<nn::ParameterStore>());
  auto layer = std::make_shared<nn::Linear>(*inst.store, "linear", 4, 3, rng);
  const Matrix x = random_matrix(rng, n, 4), r = random_matrix(rng, n, 3);
  inst.loss = [layer, x, r](Tape& t) { return probe(t, layer->forward(t, t.constant(x)), r); };
  inst.keep = layer;
  return inst;
}

Instance make_mlp(int n, Rng& rng) {
  auto inst = with_store(std::make_unique<nn::ParameterStore>());
  auto mlp = std::make_shared<nn::Mlp>(*inst.store, "mlp", 4, std::vector<int>{6, 3}, true, rng);
  const Matrix x = random_matrix(rng, n, 4), r = random_matrix(rng, n, 3);
  inst.loss = [mlp, x, r](Tape& t) { return probe(t, mlp->forward(t, t.constant(x)), r); };
  inst.keep = mlp;
  return inst;
}

Instance make_layer_norm(int n, Rng& rng) {
  auto inst = with_store(std::make_unique<nn::ParameterStore>());
  auto ln = std::make_shared<nn::LayerNorm>(*inst.store, "norm", 5);
  for (auto& p : inst.store->all()) p.value += random_matrix(rng, p.value.rows(), p.value.cols(), 0.3);
  const Matrix x = random_matrix(rng, n, 5), r = random_matrix(rng, n, 5);
  inst.loss = [ln, x, r](Tape& t) { return probe(t, ln->forward(t, t.constant(x)), r); };
  inst.keep = ln;
  return inst;
}

Instance make_attention(int n, Rng& rng) {
  auto inst = with_store(std::make_unique<nn::ParameterStore>());
  auto att = std::make_shared<Attention>(*inst.store, "attention", 6, 5, 8, 6, 2, rng);
  const Matrix q = random_matrix(rng, n, 6), kv = random_matrix(rng, n + 3, 5), r = random_matrix(rng, n, 6);
  inst.loss = [att, q, kv, r](Tape& t) { return probe(t, att->forward(t, t.constant(q), t.constant(kv)), r); };
  inst.keep = att;
  return inst;
}

Instance make_sa_layer(int n, Rng& rng) {
  auto inst = with_store(std::make_unique<nn::ParameterStore>());
  auto sa = std::make_shared<SetAbstraction>(*inst.store, "sa", 3, SetAbstractionConfig{0.02, 0.04, 8, {8, 6}}, rng);
  const PointCloud cloud = random_cloud(rng, n, 0.06);
  const auto abstracted_centers = grid_downsample(cloud, 0.02).positions;
  const Matrix r = random_matrix(rng, static_cast<Eigen::Index>(abstracted_centers.size()), 6);
  inst.loss = [sa, cloud, r](Tape& t) { return probe(t, modified_set_abstraction(t, cloud, *sa, 7).features, r); };
  inst.keep = sa;
  return inst;
}

EncoderConfig tiny_encoder() {
  EncoderConfig e;
  e.fine = {0.01, 0.02, 6, {8, 8}};
  e.coarse = {0.04, 0.08, 6, {8}};
  e.dim = 8;
  e.position_bands = 2;
  return e;
}

Instance make_two_scale(int n, Rng& rng) {
  auto inst = with_store(std::make_unique<nn::ParameterStore>());
  auto enc = std::make_shared<TwoScaleEncoder>(*inst.store, "encoder", tiny_encoder(), rng);
  const PointCloud cloud = random_cloud(rng, n, 0.08);
  const auto tokens = grid_downsample(cloud, 0.01).size();
  const Matrix r = random_matrix(rng, static_cast<Eigen::Index>(tokens), 8);
  inst.loss = [enc, cloud, r](Tape& t) { return probe(t, enc->forward(t, cloud).features, r); };
  inst.keep = enc;
  return inst;
}

Instance make_backbone(int n, Rng& rng) {
  auto inst = with_store(std::make_unique<nn::ParameterStore>());
  auto bb = std::make_shared<Backbone>(*inst.store, "backbone", 6, BackboneConfig{4, 8, 1, 2, 2}, rng);
  const Matrix x = random_matrix(rng, n, 6), r = random_matrix(rng, n, 6), rp = random_matrix(rng, 1, 8);
  inst.loss = [bb, x, r, rp](Tape& t) {
    const Backbone::Output out = bb->forward(t, t.constant(x));
    return ad::add(probe(t, out.tokens, r), probe(t, out.pooled, rp));
  };
  inst.keep = bb;
  return inst;
}

Instance make_score_head(int n, Rng& rng) {
  auto inst = with_store(std::make_unique<nn::ParameterStore>());
  auto head = std::make_shared<ScoreHead>(*inst.store, "score", 6, rng);
  for (auto& p : inst.store->all()) p.value += random_matrix(rng, p.value.rows(), p.value.cols(), 0.3);
  const Matrix x = random_matrix(rng, n + 2, 6), r = random_matrix(rng, n, 1);
  inst.loss = [head, x, r, n](Tape& t) { return probe(t, head->forward(t, t.constant(x), n), r); };
  inst.keep = head;
  return inst;
}

// Full interaction model on a small cloud with the combined loss; the
// locality weight is large enough for its term to register.
Instance make_ipm_loss(int n, Rng& rng) {
  IpmConfig cfg;
  cfg.encoder = tiny_encoder();
  cfg.encoder.fine.grid_resolution = 0.005;
  cfg.encoder.fine.ball_radius = 0.01;
  cfg.backbone = {4, 8, 1, 2, 2};
  cfg.proprio_hidden = {4};
  // Points on a sparse lattice so that every point is its own token.
  PointCloud cloud;
  for (int i = 0; i < n; ++i) {
    const Vec3 p(0.01 * (i % 4) + 0.002, 0.01 * ((i / 4) % 4) + 0.002, 0.01 * (i / 16) + 0.002);
    cloud.push_back(p, Vec3(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)));
  }
  cloud.source_view.clear();
  auto model = std::make_shared<IpmModel>(cfg, Vocabulary({"open", "the", "drawer"}), rng());
  Instance inst;
  inst.store = &model->params();
  const Vec3 target = cloud.positions[static_cast<std::size_t>(n / 2)];
  inst.loss = [model, cloud, target](Tape& t) {
    const IpmModel::Output out = model->forward(t, cloud, "open the top drawer", ProprioState{0, 0.08, 0});
    return ipm_loss(out.scores, out.points, snap_to_tokens(out.points, target), 400.0);
  };
  inst.keep = model;
  return inst;
}

ApmConfig tiny_apm() {
  ApmConfig a;
  a.local = {0.02, 0.04, 6, {8}};
  a.wide = {0.05, 0.1, 6, {8}};
  a.global_mlp = {8};
  a.head_hidden = {8};
  a.gripper_hidden = {4};
  a.language_dim = 4;
  return a;
}

ActionTriplet random_target(Rng& rng) {
  ActionTriplet t;
  for (int i = 0; i < 3; ++i) {
    t.actions[i].delta_p = Vec3(gaussian(rng, 0.05), gaussian(rng, 0.05), gaussian(rng, 0.05));
    t.actions[i].q = UnitQuaternion(gaussian(rng, 1), gaussian(rng, 1), gaussian(rng, 1), gaussian(rng, 1));
    t.actions[i].g = i % 2;
    t.proprio[i] = {1 - i % 2, uniform(rng, 0, 0.08), i};
  }
  return t;
}

Instance make_apm(int n, Rng& rng, bool with_loss) {
  auto model = std::make_shared<ApmModel>(tiny_apm(), Vocabulary({"open", "the", "drawer"}), rng());
  PointCloud cloud = random_cloud(rng, n, 0.12);
  const Vec3 origin(0.06, 0.06, 0.06);
  const ActionTriplet target = random_target(rng);
  Matrix r = random_matrix(rng, 1, 8);
  Instance inst;
  inst.store = &model->params();
  inst.loss = [model, cloud, origin, target, r, with_loss](Tape& t) {
    const ApmOutput out = model->forward(t, cloud, origin, target.proprio, "open the top drawer");
    if (with_loss) return apm_loss(out, target, ApmLossWeights{1.0, 0.5, 0.1}, true);
    Var acc = t.constant(Matrix::Zero(1, 1));
    for (int i = 0; i < 3; ++i) {
      acc = ad::add(acc, probe(t, out.delta_p[i], r.leftCols(3)));
      acc = ad::add(acc, probe(t, out.orientation[i], r.middleCols(3, 4)));
      acc = ad::add(acc, ad::scale(out.grip_logit[i], r(0, 7)));
    }
    return acc;
  };
  inst.keep = model;
  return inst;
}

using Factory = std::function<Instance(int, Rng&)>;

const std::map<std::string, Factory>& registry() {
  static const std::map<std::string, Factory> kRegistry = {
      {"linear", make_linear},
      {"mlp", make_mlp},
      {"layer_norm", make_layer_norm},
      {"attention", make_attention},
      {"sa_layer", make_sa_layer},
      {"two_scale_encoder", make_two_scale},
      {"backbone", make_backbone},
      {"score_head", make_score_head},
      {"ipm_loss", make_ipm_loss},
      {"apm_heads", [](int n, Rng& rng) { return make_apm(n, rng, false); }},
      {"apm_loss", [](int n, Rng& rng) { return make_apm(n, rng, true); }},
  };
  return kRegistry;
}

}  // namespace

std::vector<std::string> grad_check_modules() {
  std::vector<std::string> names;
  for (const auto& [name, factory] : registry()) names.push_back(name);
  return names;
}

GradCheckReport run_grad_check(const std::string& module, int instance_size, double tolerance,
                               const GradCheckOptions& options) {
  const auto it = registry().find(module);
  if (it == registry().end()) throw InvalidArgument("no gradient check registered for '" + module + "'");
  if (instance_size < 1) throw InvalidArgument("grad check instance size must be >= 1");
  Rng rng(derive_seed(options.seed, {0x96ad}));
  Instance inst = it->second(instance_size, rng);
  GradCheckReport report = check_gradients(*inst.store, inst.loss, tolerance, options);
  report.module = module;
  return report;
}

GradCheckReport grad_check(const std::string& module, int instance_size, double tolerance,
                           const GradCheckOptions& options) {
  GradCheckReport report = run_grad_check(module, instance_size, tolerance, options);
  if (!report.passed) {
    throw ToleranceExceeded(module + ": worst parameter " + report.worst_parameter + "[" +
                            std::to_string(report.worst_index) + "] relative error " +
                            std::to_string(report.max_relative_error) + " (analytic " +
                            std::to_string(report.worst_analytic) + ", numeric " +
                            std::to_string(report.worst_numeric) + ")");
  }
  return report;
}

}  // namespace slap
