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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <unistd.h>

#include "oracles.hpp"
#include "slap/apm.hpp"
#include "slap/backbone.hpp"
#include "slap/cloud_io.hpp"
#include "slap/config.hpp"
#include "slap/errors.hpp"
#include "slap/ipm.hpp"

namespace slap {
namespace {

using ad::Matrix;
using ad::Tape;

const Demonstration& demo() {
  static const Demonstration d = generate_scene(task_template(1), 5, 2);
  return d;
}

// Backbone

TEST(Backbone, TokenOutputsArePermutationEquivariant) {
  nn::ParameterStore store;
  Rng rng(2);
  BackboneConfig cfg{8, 16, 2, 2, 2};
  Backbone bb(store, "bb", 12, cfg, rng);
  Matrix x(20, 12);
  std::mt19937_64 g(1);
  std::normal_distribution<double> n(0, 1);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(g);
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), g);
  Matrix xp(20, 12);
  for (int i = 0; i < 20; ++i) xp.row(i) = x.row(perm[i]);
  Tape tape(false);
  const Backbone::Output a = bb.forward(tape, tape.constant(x));
  const Backbone::Output b = bb.forward(tape, tape.constant(xp));
  ASSERT_EQ(a.tokens.rows(), 20);
  ASSERT_EQ(a.tokens.cols(), 12);
  ASSERT_EQ(a.pooled.cols(), 16);
  for (int i = 0; i < 20; ++i) {
    EXPECT_LT((a.tokens.value().row(perm[i]) - b.tokens.value().row(i)).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_LT((a.pooled.value() - b.pooled.value()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Backbone, LatentSizeIsIndependentOfSequenceLength) {
  nn::ParameterStore store;
  Rng rng(3);
  Backbone bb(store, "bb", 8, BackboneConfig{4, 8, 1, 2, 2}, rng);
  const std::size_t params = store.scalar_count();
  for (int len : {1, 7, 300}) {
    Tape tape(false);
    const Backbone::Output out = bb.forward(tape, tape.constant(Matrix::Ones(len, 8)));
    EXPECT_EQ(out.tokens.rows(), len);
    EXPECT_EQ(out.pooled.rows(), 1);
  }
  EXPECT_EQ(store.scalar_count(), params);
  Tape tape(false);
  EXPECT_THROW(bb.forward(tape, tape.constant(Matrix(0, 8))), InvalidArgument);
}

TEST(Backbone, ConfigValidation) {
  BackboneConfig bad;
  bad.heads = 3;  // does not divide latent_dim
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.latent_count = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

// Interaction loss and prediction

std::vector<Vec3> lattice(int n) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(0.005 * (i % 10), 0.005 * (i / 10 % 10), 0.005 * (i / 100));
  return pts;
}

TEST(IpmLoss, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int size = 1 + static_cast<int>(rng() % 300);
    const auto pts = lattice(size);
    std::vector<double> f(size);
    for (double& v : f) v = n(rng);
    const std::size_t t = rng() % size;
    const double w = trial % 3 == 0 ? 0.0 : 5.0 * (trial % 7);
    const IpmLossParts got = ipm_loss(f, pts, pts[t], w);
    const oracle::IpmLossValue want = oracle::ipm_loss(f, pts, t, w);
    EXPECT_NEAR(got.cross_entropy, want.cross_entropy, 1e-9 * std::max(1.0, want.cross_entropy));
    EXPECT_NEAR(got.locality, want.locality, 1e-12);
    EXPECT_NEAR(got.total, want.total, 1e-9 * std::max(1.0, want.total));

    Tape tape;
    Matrix col(size, 1);
    for (int k = 0; k < size; ++k) col(k, 0) = f[k];
    IpmLossParts parts;
    const double v = ipm_loss(tape.constant(col), pts, static_cast<int>(t), w, &parts).scalar();
    EXPECT_NEAR(v, want.total, 1e-9 * std::max(1.0, want.total));
  }
}

TEST(IpmLoss, InvariantToScoreShiftAndSharpensWithTargetScore) {
  const auto pts = lattice(50);
  std::vector<double> f(50, 0.0);
  f[3] = 1.0;
  const IpmLossParts base = ipm_loss(f, pts, pts[3], 2.0);
  std::vector<double> shifted = f;
  for (double& v : shifted) v += 123.0;
  EXPECT_NEAR(ipm_loss(shifted, pts, pts[3], 2.0).total, base.total, 1e-9);
  double prev_ce = base.cross_entropy, prev_loc = base.locality;
  for (double s = 2.0; s < 10.0; s += 1.0) {
    f[3] = s;
    const IpmLossParts p = ipm_loss(f, pts, pts[3], 2.0);
    EXPECT_LT(p.cross_entropy, prev_ce);
    EXPECT_LT(p.locality, prev_loc);
    prev_ce = p.cross_entropy;
    prev_loc = p.locality;
  }
}

TEST(IpmLoss, LocalityIsZeroForAOneHotAtTheTarget) {
  const auto pts = lattice(30);
  std::vector<double> f(30, -1e4);
  f[7] = 0.0;
  EXPECT_NEAR(locality_loss(f, pts, pts[7]), 0.0, 1e-15);
  EXPECT_NEAR(ipm_loss(f, pts, pts[7], 10.0).total, 0.0, 1e-12);
}

TEST(IpmLoss, LabelsFarFromEveryTokenAreRejected) {
  const auto pts = lattice(20);
  std::vector<double> f(20, 0.0);
  EXPECT_THROW(ipm_loss(f, pts, Vec3(1, 1, 1), 1.0), TargetNotInP);
  EXPECT_THROW(snap_to_tokens({}, Vec3::Zero()), TargetNotInP);
  EXPECT_EQ(snap_to_tokens(pts, pts[4] + Vec3(0.001, 0, 0)), 4);
}

TEST(Prediction, ArgmaxTiesGoToTheLowestIndexAndMaskIsCeilFivePercent) {
  for (int n = 1; n <= 250; ++n) {
    std::vector<double> f(n, 0.0);
    const InteractionPrediction p = make_prediction(f, lattice(n));
    EXPECT_EQ(p.index, 0);
    EXPECT_EQ(p.top_mask.size(), static_cast<std::size_t>(std::ceil(0.05 * n - 1e-12)));
  }
  std::vector<double> f{0.1, 0.9, 0.3, 0.9, 0.2};
  const InteractionPrediction p = make_prediction(f, lattice(5));
  EXPECT_EQ(p.index, 1);
  EXPECT_EQ(p.point, lattice(5)[1]);
  EXPECT_THROW(make_prediction({}, {}), InvalidArgument);
  EXPECT_THROW(make_prediction({1.0}, lattice(2)), InvalidArgument);
}

TEST(Prediction, AttentionExportMarksTheTopFivePercent) {
  std::mt19937_64 rng(1);
  std::vector<double> f(100);
  for (double& v : f) v = std::uniform_real_distribution<double>(0, 1)(rng);
  PointCloud tokens;
  for (const Vec3& p : lattice(100)) tokens.push_back(p, Vec3(0.5, 0.5, 0.5));
  tokens.source_view.clear();
  const InteractionPrediction pred = make_prediction(f, tokens.positions);
  const auto path = std::filesystem::temp_directory_path() / ("slap_attention_" + std::to_string(::getpid()) + ".ply");
  export_attention(pred, tokens, path);
  const PlyData back = load_ply(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.labels.size(), back.cloud.size());
  int red = 0, marker = 0;
  for (std::size_t i = 0; i < back.cloud.size(); ++i) {
    if (back.labels[i] == 1) {
      ++red;
      EXPECT_EQ(back.cloud.colors[i], Vec3(1, 0, 0));
    }
    if (back.labels[i] == 2) {
      ++marker;
      EXPECT_NEAR((back.cloud.positions[i] - pred.point).norm(), 0.01, 1e-6);
    }
  }
  EXPECT_EQ(red, 5);
  EXPECT_GT(marker, 0);
  std::vector<int> top(f.size());
  std::iota(top.begin(), top.end(), 0);
  std::sort(top.begin(), top.end(), [&](int a, int b) { return f[a] > f[b]; });
  for (int k = 0; k < 5; ++k) EXPECT_EQ(back.labels[top[k]], 1);
}

// Interaction model

TEST(IpmModel, ScoresEveryTokenDeterministically) {
  const SlapConfig cfg = compact_config();
  const Vocabulary vocab = Vocabulary::from_commands(std::vector<std::string>{demo().command});
  IpmModel a(cfg.model.ipm, vocab, 3), b(cfg.model.ipm, vocab, 3);
  const InteractionPrediction pa = a.predict(demo());
  const InteractionPrediction pb = b.predict(demo());
  EXPECT_EQ(pa.scores, pb.scores);
  EXPECT_EQ(pa.points, grid_downsample(demo().cloud, kTokenResolution).positions);
  EXPECT_EQ(pa.scores.size(), pa.points.size());
  EXPECT_NO_THROW(a.predict(demo().cloud, "words never seen before", demo().initial_state));
}

TEST(IpmModel, CommandChangesScores) {
  const SlapConfig cfg = compact_config();
  const std::vector<std::string> commands{"open the top drawer", "close the drawer"};
  IpmModel model(cfg.model.ipm, Vocabulary::from_commands(commands), 4);
  const auto a = model.predict(demo().cloud, commands[0], demo().initial_state);
  const auto b = model.predict(demo().cloud, commands[1], demo().initial_state);
  double diff = 0;
  for (std::size_t i = 0; i < a.scores.size(); ++i) diff = std::max(diff, std::abs(a.scores[i] - b.scores[i]));
  EXPECT_GT(diff, 1e-9);
}

// Action model

TEST(ApmLoss, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    ApmRawPrediction pred;
    ActionTriplet target;
    std::array<Vec3, 3> dp;
    std::array<Eigen::Vector4d, 3> q;
    for (int i = 0; i < 3; ++i) {
      dp[i] = Vec3(n(rng), n(rng), n(rng)) * 0.1;
      const UnitQuaternion uq(n(rng), n(rng), n(rng), n(rng));
      q[i] = uq.coeffs_wxyz();
      pred.delta_p[i] = dp[i];
      pred.orientation[i] = q[i];
      pred.grip_logit[i] = 4 * n(rng);
      target.actions[i].delta_p = Vec3(n(rng), n(rng), n(rng)) * 0.1;
      target.actions[i].q = UnitQuaternion(n(rng), n(rng), n(rng), n(rng));
      target.actions[i].g = static_cast<int>(rng() % 2);
    }
    const bool squared = trial % 2 == 0;
    const ApmLossWeights w{1.0 + trial % 3, 0.5, 0.25};
    const double want = oracle::apm_loss(dp, q, pred.grip_logit, target, w.position, w.orientation, w.gripper,
                                         squared);
    EXPECT_NEAR(apm_loss(pred, target, w, squared).total, want, 1e-9 * std::max(1.0, want));
  }
}

struct ApmFixture : ::testing::Test {
  ApmFixture() : model(compact_config().model.apm, command_vocab(), 7) {}
  static Vocabulary command_vocab() {
    const std::string commands[] = {demo().command, "close the drawer"};
    return Vocabulary::from_commands(commands);
  }
  const std::string& command = demo().command;
  ApmModel model;
};

TEST_F(ApmFixture, OutputsAreInvariantToAJointTranslation) {
  const Vec3 origin = demo().interaction_point.cast<float>().cast<double>();
  const PointCloud input = model.select_input(demo().cloud, origin);
  PointCloud moved = input;
  for (auto& p : moved.positions) p += Vec3(1.0, -1.0, 1.0);
  const Vec3 moved_origin = origin + Vec3(1.0, -1.0, 1.0);
  const auto proprio = demo().pre_action_states();
  const ApmRawPrediction a = model.raw_predict(input, origin, proprio, command);
  const ApmRawPrediction b = model.raw_predict(moved, moved_origin, proprio, command);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a.delta_p[i], b.delta_p[i]);
    EXPECT_EQ(a.orientation[i], b.orientation[i]);
    EXPECT_EQ(a.grip_logit[i], b.grip_logit[i]);
  }
}

TEST_F(ApmFixture, GripperDependsOnlyOnProprioception) {
  const auto proprio = demo().pre_action_states();
  const Vec3 origin = demo().interaction_point;
  const ApmRawPrediction a = model.raw_predict(model.select_input(demo().cloud, origin), origin, proprio, command);
  PointCloud other = crop_sphere(demo().cloud, origin, 0.05);
  for (auto& c : other.colors) c = Vec3(0.1, 0.9, 0.2);
  const ApmRawPrediction b = model.raw_predict(other, origin + Vec3(0.01, 0, 0), proprio, command);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.grip_logit[i], b.grip_logit[i]);
  auto changed = proprio;
  changed[1].g_w += 0.02;
  const ApmRawPrediction c = model.raw_predict(other, origin, changed, command);
  EXPECT_NE(c.grip_logit[1], a.grip_logit[1]);
}

TEST_F(ApmFixture, CommandConditionsPoseHeadsOnly) {
  const auto proprio = demo().pre_action_states();
  const Vec3 origin = demo().interaction_point;
  const PointCloud input = model.select_input(demo().cloud, origin);
  const ApmRawPrediction a = model.raw_predict(input, origin, proprio, command);
  const ApmRawPrediction b = model.raw_predict(input, origin, proprio, "close the drawer");
  for (int i = 0; i < 3; ++i) {
    EXPECT_NE(a.delta_p[i], b.delta_p[i]);
    EXPECT_NE(a.orientation[i], b.orientation[i]);
    EXPECT_EQ(a.grip_logit[i], b.grip_logit[i]);
  }
  EXPECT_THROW(model.raw_predict(input, origin, proprio, ""), InvalidArgument);
}

TEST(ApmLanguage, DisabledConditioningIgnoresTheCommand) {
  ApmConfig cfg = compact_config().model.apm;
  cfg.language_dim = 0;
  ApmModel model(cfg, Vocabulary({"open", "close"}), 3);
  const Vec3 origin = demo().interaction_point;
  const PointCloud input = model.select_input(demo().cloud, origin);
  const auto proprio = demo().pre_action_states();
  const ApmRawPrediction a = model.raw_predict(input, origin, proprio, "open");
  const ApmRawPrediction b = model.raw_predict(input, origin, proprio, "close");
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.delta_p[i], b.delta_p[i]);
  cfg.language_dim = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST_F(ApmFixture, PredictionsAreCanonicalAndBounded) {
  const Vec3 origin = demo().interaction_point;
  const ActionTriplet p =
      model.predict(model.select_input(demo().cloud, origin), origin, demo().pre_action_states(), command);
  for (const Action& a : p.actions) {
    EXPECT_GE(a.q.w(), 0.0);
    EXPECT_NEAR(a.q.coeffs_wxyz().norm(), 1.0, 1e-12);
    EXPECT_TRUE(a.g == 0 || a.g == 1);
  }
  const auto abs = assemble_absolute(p, origin);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(abs[i].position, origin + p.actions[i].delta_p);
}

TEST_F(ApmFixture, EmptyCropIsReported) {
  EXPECT_THROW(model.select_input(demo().cloud, Vec3(10, 10, 10)), EmptyCrop);
}

TEST(ApmInputModes, OriginAndInputSelection) {
  ApmConfig cfg = compact_config().model.apm;
  const Vec3 p = demo().interaction_point;
  cfg.input = ApmInput::Cropped;
  ApmModel cropped(cfg, {}, 1);
  EXPECT_EQ(cropped.origin_for(demo(), p), p);
  for (const Vec3& q : cropped.select_input(demo().cloud, p).positions) EXPECT_LE((q - p).norm(), cfg.crop_radius);
  cfg.input = ApmInput::FullScene;
  ApmModel full(cfg, {}, 1);
  EXPECT_EQ(full.origin_for(demo(), p), p);
  EXPECT_EQ(full.select_input(demo().cloud, p).size(), demo().cloud.size());
  cfg.input = ApmInput::Absolute;
  ApmModel absolute(cfg, {}, 1);
  EXPECT_EQ(absolute.origin_for(demo(), p), demo().workspace_center);
  EXPECT_EQ(apm_input_from_string(to_string(ApmInput::FullScene)), ApmInput::FullScene);
  EXPECT_THROW(apm_input_from_string("sideways"), ConfigError);
}

}  // namespace
}  // namespace slap
