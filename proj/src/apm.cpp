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


#include "slap/apm.hpp"

#include <cmath>

#include "slap/errors.hpp"
#include "slap/random.hpp"

namespace slap {

using ad::Matrix;
using ad::Tape;
using ad::Var;

void ApmLossWeights::validate() const {
  if (!(position >= 0 && orientation >= 0 && gripper >= 0)) throw ConfigError("apm loss weights must be >= 0");
}

const char* to_string(ApmInput input) {
  switch (input) {
    case ApmInput::Cropped: return "cropped";
    case ApmInput::FullScene: return "full_scene";
    case ApmInput::Absolute: return "absolute";
  }
  return "?";
}

ApmInput apm_input_from_string(const std::string& s) {
  if (s == "cropped") return ApmInput::Cropped;
  if (s == "full_scene") return ApmInput::FullScene;
  if (s == "absolute") return ApmInput::Absolute;
  throw ConfigError("unknown apm input mode: " + s);
}

void ApmConfig::validate() const {
  if (!(crop_radius > 0)) throw ConfigError("apm: crop_radius must be positive");
  local.validate();
  wide.validate();
  if (global_mlp.empty() || head_hidden.empty() || gripper_hidden.empty()) {
    throw ConfigError("apm: hidden layer lists must be nonempty");
  }
  if (!(position_scale > 0)) throw ConfigError("apm: position_scale must be positive");
  if (language_dim < 0) throw ConfigError("apm: language_dim must be >= 0");
}

namespace {

double bce(double logit, double target) {
  // log(1 + exp(-|x|)) + max(x, 0) - x * t
  return std::log1p(std::exp(-std::abs(logit))) + std::max(logit, 0.0) - logit * target;
}

}  // namespace

ApmLossParts apm_loss(const ApmRawPrediction& pred, const ActionTriplet& target, const ApmLossWeights& weights,
                      bool squared_orientation) {
  ApmLossParts parts;
  for (int i = 0; i < 3; ++i) {
    const Action& t = target.actions[i];
    parts.position += (pred.delta_p[i] - t.delta_p).squaredNorm();
    const double dot = pred.orientation[i].dot(t.q.coeffs_wxyz());
    parts.orientation += squared_orientation ? 1.0 - dot * dot : 1.0 - dot;
    parts.gripper += bce(pred.grip_logit[i], t.g);
  }
  parts.total =
      weights.position * parts.position + weights.orientation * parts.orientation + weights.gripper * parts.gripper;
  return parts;
}

Var apm_loss(const ApmOutput& pred, const ActionTriplet& target, const ApmLossWeights& weights,
             bool squared_orientation, ApmLossParts* parts) {
  Tape& tape = *pred.delta_p[0].tape();
  std::vector<Var> terms;
  ApmLossParts p;
  for (int i = 0; i < 3; ++i) {
    const Action& t = target.actions[i];
    Matrix dp(1, 3);
    dp << t.delta_p.x(), t.delta_p.y(), t.delta_p.z();
    const Var diff = ad::sub(pred.delta_p[i], tape.constant(dp));
    const Var pos = ad::sum_all(ad::mul(diff, diff));
    Matrix q(1, 4);
    const Eigen::Vector4d tq = t.q.coeffs_wxyz();
    q << tq[0], tq[1], tq[2], tq[3];
    const Var dot = ad::sum_all(ad::mul(pred.orientation[i], tape.constant(q)));
    const Var ori = squared_orientation ? ad::add_const(ad::scale(ad::mul(dot, dot), -1.0), 1.0)
                                        : ad::add_const(ad::scale(dot, -1.0), 1.0);
    const Var grip = ad::bce_with_logits(pred.grip_logit[i], t.g);
    p.position += pos.scalar();
    p.orientation += ori.scalar();
    p.gripper += grip.scalar();
    terms.push_back(ad::scale(pos, weights.position));
    terms.push_back(ad::scale(ori, weights.orientation));
    terms.push_back(ad::scale(grip, weights.gripper));
  }
  Var total = terms[0];
  for (std::size_t k = 1; k < terms.size(); ++k) total = ad::add(total, terms[k]);
  p.total = total.scalar();
  if (parts) *parts = p;
  return total;
}

std::array<Keyframe, 3> assemble_absolute(const ActionTriplet& pred, const Vec3& origin) {
  std::array<Keyframe, 3> out;
  for (int i = 0; i < 3; ++i) {
    out[i].position = origin + pred.actions[i].delta_p;
    out[i].q = pred.actions[i].q;
    out[i].g = pred.actions[i].g;
    out[i].proprio = pred.proprio[i];
  }
  return out;
}

ApmModel::ApmModel(const ApmConfig& cfg, Vocabulary vocab, std::uint64_t seed)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  Rng rng(seed);
  const int trunks = cfg_.separate_trunks ? 3 : 1;
  for (int k = 0; k < trunks; ++k) {
    const std::string name = "apm.trunk" + std::to_string(k);
    Trunk t;
    t.local = SetAbstraction(store_, name + ".local", 3, cfg_.local, rng);
    t.wide = SetAbstraction(store_, name + ".wide", t.local.out_dim(), cfg_.wide, rng);
    t.global = nn::Mlp(store_, name + ".global", 3 + t.wide.out_dim(), cfg_.global_mlp, true, rng);
    trunks_.push_back(std::move(t));
  }
  const int g = cfg_.global_mlp.back();
  const int conditioned = g + cfg_.language_dim;
  if (cfg_.language_dim > 0) {
    words_ = &store_.create("apm.words", vocab_.table_size(), cfg_.language_dim);
    nn::init_normal(*words_, rng, 0.1);
  }
  for (int i = 0; i < 3; ++i) {
    const std::string name = "apm.action" + std::to_string(i);
    std::vector<int> pos = cfg_.head_hidden, ori = cfg_.head_hidden, grip = cfg_.gripper_hidden;
    pos.push_back(3);
    ori.push_back(4);
    grip.push_back(1);
    position_heads_[i] = nn::Mlp(store_, name + ".position", conditioned, pos, false, rng);
    orientation_heads_[i] = nn::Mlp(store_, name + ".orientation", conditioned, ori, false, rng);
    gripper_heads_[i] = nn::Mlp(store_, name + ".gripper", 3, grip, false, rng);
  }
}

PointCloud ApmModel::select_input(const PointCloud& scene, const Vec3& origin) const {
  if (cfg_.input != ApmInput::Cropped) {
    if (scene.empty()) throw EmptyCrop("action model input is empty");
    return scene;
  }
  PointCloud crop = crop_sphere(scene, origin, cfg_.crop_radius);
  if (crop.empty()) throw EmptyCrop("no points within the crop radius of the interaction point");
  return crop;
}

Vec3 ApmModel::origin_for(const Demonstration& demo, const Vec3& interaction_point) const {
  return cfg_.input == ApmInput::Absolute ? demo.workspace_center : interaction_point;
}

Var ApmModel::encode(Tape& tape, const Trunk& trunk, const PointCloud& input, const Vec3& origin) const {
  PointCloud rel = input;
  for (auto& p : rel.positions) p -= origin;
  AbstractedCloud local = modified_set_abstraction(tape, rel, trunk.local, cfg_.neighbor_seed);
  const std::vector<Vec3> centers = grid_downsample(PointCloud{local.centers, local.centers, {}},
                                                    cfg_.wide.grid_resolution)
                                        .positions;
  const Var wide =
      trunk.wide.forward(tape, local.centers, local.features, centers, derive_seed(cfg_.neighbor_seed, {1}));
  Matrix pos(static_cast<Eigen::Index>(centers.size()), 3);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    pos.row(static_cast<Eigen::Index>(i)) = (centers[i] / cfg_.crop_radius).transpose();
  }
  const Var parts[] = {tape.constant(std::move(pos)), wide};
  const int offsets[] = {0, static_cast<int>(centers.size())};
  return ad::segment_max(trunk.global.forward(tape, ad::concat_cols(parts)), offsets);
}

ApmOutput ApmModel::forward(Tape& tape, const PointCloud& input, const Vec3& origin,
                            const std::array<ProprioState, 3>& proprio, std::string_view command) const {
  if (input.empty()) throw EmptyCrop("action model input is empty");
  std::vector<Var> features;
  for (const Trunk& t : trunks_) features.push_back(encode(tape, t, input, origin));
  if (words_) {
    // Mean of the command's word embeddings, appended to every trunk feature.
    const std::vector<int> ids = vocab_.encode(command);
    const Var language = ad::mean_rows(ad::gather_rows(tape.parameter(*words_), ids));
    for (Var& f : features) {
      const Var parts[] = {f, language};
      f = ad::concat_cols(parts);
    }
  }
  ApmOutput out;
  for (int i = 0; i < 3; ++i) {
    const Var g = features[cfg_.separate_trunks ? i : 0];
    out.delta_p[i] = ad::scale(position_heads_[i].forward(tape, g), cfg_.position_scale);
    Var q = ad::normalize_rows(orientation_heads_[i].forward(tape, g));
    if (q.value()(0, 0) < 0) q = ad::scale(q, -1.0);
    out.orientation[i] = q;
    const Eigen::Vector3d f = proprio[i].features();
    Matrix s(1, 3);
    s << f[0], f[1], f[2];
    out.grip_logit[i] = gripper_heads_[i].forward(tape, tape.constant(s));
  }
  return out;
}

ApmRawPrediction ApmModel::raw_predict(const PointCloud& input, const Vec3& origin,
                                       const std::array<ProprioState, 3>& proprio, std::string_view command) const {
  Tape tape(false);
  const ApmOutput out = forward(tape, input, origin, proprio, command);
  ApmRawPrediction raw;
  for (int i = 0; i < 3; ++i) {
    const Matrix& dp = out.delta_p[i].value();
    const Matrix& q = out.orientation[i].value();
    raw.delta_p[i] = Vec3(dp(0, 0), dp(0, 1), dp(0, 2));
    raw.orientation[i] = Eigen::Vector4d(q(0, 0), q(0, 1), q(0, 2), q(0, 3));
    raw.grip_logit[i] = out.grip_logit[i].scalar();
  }
  return raw;
}

ActionTriplet ApmModel::predict(const PointCloud& input, const Vec3& origin,
                                const std::array<ProprioState, 3>& proprio, std::string_view command) const {
  const ApmRawPrediction raw = raw_predict(input, origin, proprio, command);
  ActionTriplet out;
  out.proprio = proprio;
  for (int i = 0; i < 3; ++i) {
    const auto& q = raw.orientation[i];
    out.actions[i].delta_p = raw.delta_p[i];
    out.actions[i].q = UnitQuaternion(q[0], q[1], q[2], q[3]);
    out.actions[i].g = raw.grip_logit[i] >= 0.0 ? 1 : 0;
  }
  return out;
}

}  // namespace slap
