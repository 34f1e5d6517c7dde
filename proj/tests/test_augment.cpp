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

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <tuple>

#include "oracles.hpp"
#include "slap/augment.hpp"
#include "slap/dataset.hpp"
#include "slap/ipm.hpp"
#include "slap/random.hpp"

namespace slap {
namespace {

using PointSet = std::set<std::tuple<double, double, double>>;

PointSet as_set(const PointCloud& c) {
  PointSet s;
  for (const Vec3& p : c.positions) s.emplace(p.x(), p.y(), p.z());
  return s;
}

bool subset(const PointCloud& a, const PointCloud& b) {
  const PointSet sb = as_set(b);
  for (const Vec3& p : a.positions) {
    if (!sb.count({p.x(), p.y(), p.z()})) return false;
  }
  return true;
}

const Demonstration& demo() {
  static const Demonstration d = generate_scene(task_template(0), 17, 2);
  return d;
}

PointCloud plane_scene() {
  PointCloud c;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) c.push_back(Vec3(0.005 * i, 0.005 * j, 0.0), Vec3(0.2, 0.4, 0.6));
  }
  c.source_view.clear();
  return c;
}

TEST(Dropout, ZeroRateIsIdentityAndOutputIsSubset) {
  AugmentConfig none;
  none.dropout_mean = 0.0;
  const PointCloud same = elliptical_dropout(demo().cloud, 3, none);
  EXPECT_EQ(same.positions, demo().cloud.positions);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const PointCloud out = elliptical_dropout(demo().cloud, s);
    EXPECT_TRUE(subset(out, demo().cloud));
    EXPECT_GE(out.size(), std::min<std::size_t>(256, demo().cloud.size()));
  }
}

TEST(Dropout, MeanRemovalFractionOnPlaneIsModerate) {
  const PointCloud plane = plane_scene();
  double removed = 0.0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    removed += 1.0 - static_cast<double>(elliptical_dropout(plane, static_cast<std::uint64_t>(s)).size()) /
                         static_cast<double>(plane.size());
  }
  const double mean = removed / seeds;
  RecordProperty("mean_removal_fraction", std::to_string(mean));
  EXPECT_GT(mean, 0.0);
  EXPECT_LT(mean, 0.5);
}

TEST(Dropout, NeverLeavesFewerThanFloor) {
  AugmentConfig heavy;
  heavy.dropout_mean = 200.0;
  heavy.ellipse_axis_min = 0.1;
  heavy.ellipse_axis_max = 0.3;
  const PointCloud plane = plane_scene();
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_GE(elliptical_dropout(plane, s, heavy).size(), 256u);
}

TEST(Noise, ZeroRangeIsIdentityAndCountPreserved) {
  AugmentConfig zero;
  zero.noise_std_min = zero.noise_std_max = 0.0;
  EXPECT_EQ(additive_noise(demo().cloud, 1, zero).positions, demo().cloud.positions);
  const PointCloud noisy = additive_noise(demo().cloud, 1);
  EXPECT_EQ(noisy.size(), demo().cloud.size());
  EXPECT_EQ(noisy.colors, demo().cloud.colors);
}

TEST(Noise, OffsetMeanIsStatisticallyZero) {
  AugmentConfig fixed;
  fixed.noise_std_min = fixed.noise_std_max = 0.002;
  PointCloud big;
  for (int i = 0; i < 100000; ++i) big.push_back(Vec3(0.001 * (i % 100), 0.001 * (i / 100 % 100), 0.0), Vec3::Zero());
  big.source_view.clear();
  const PointCloud noisy = additive_noise(big, 42, fixed);
  Vec3 mean = Vec3::Zero();
  for (std::size_t i = 0; i < big.size(); ++i) mean += noisy.positions[i] - big.positions[i];
  mean /= static_cast<double>(big.size());
  const double bound = 3.0 * 0.002 / std::sqrt(static_cast<double>(big.size()));
  for (int a = 0; a < 3; ++a) EXPECT_LT(std::abs(mean[a]), bound);
}

TEST(Rotation, ZeroAngleIsIdentityAndLabelsCoRotate) {
  const Demonstration same = rotate_demo(demo(), 0.0);
  EXPECT_EQ(serialize_episode(same), serialize_episode(demo()));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Demonstration r = rotational_randomization(demo(), s);
    EXPECT_EQ(r.command, demo().command);
    EXPECT_NO_THROW(r.validate());
    EXPECT_EQ(label_interaction_point(r.keyframes).first, r.interaction_index);
    EXPECT_TRUE(r.part_box.contains(r.interaction_point, 1e-9));
  }
}

TEST(Rotation, RelativeOffsetsRotateWithTheScene) {
  const double angle = 0.6;
  const Demonstration r = rotate_demo(demo(), angle);
  const ActionTriplet before = relative_actions(demo(), demo().interaction_point);
  const ActionTriplet after = relative_actions(r, r.interaction_point);
  for (int i = 0; i < 3; ++i) {
    const Vec3 expected = rotate_z(before.actions[i].delta_p, angle, Vec3::Zero());
    EXPECT_LT((after.actions[i].delta_p - expected).norm(), 1e-9);
    const UnitQuaternion expected_q =
        UnitQuaternion::from_axis_angle(Vec3::UnitZ(), angle) * demo().keyframes[i].q;
    EXPECT_LT(quat_angle(after.actions[i].q, expected_q), 1e-6);
  }
}

TEST(Rotation, AnglesStayInRange) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Demonstration r = rotational_randomization(demo(), s);
    const Vec3 a = demo().interaction_point - demo().workspace_center;
    const Vec3 b = r.interaction_point - r.workspace_center;
    const double angle = std::atan2(a.x() * b.y() - a.y() * b.x(), a.x() * b.x() + a.y() * b.y());
    EXPECT_LE(std::abs(angle), std::numbers::pi / 4 + 1e-9);
  }
}

TEST(Crop, ProbabilityZeroIsIdentity) {
  AugmentConfig never;
  never.crop_probability = 0.0;
  EXPECT_EQ(serialize_episode(random_crop(demo(), 5, never)), serialize_episode(demo()));
}

TEST(Crop, KeepsLabelNeighborhoodAndIsSubset) {
  AugmentConfig tight;
  tight.crop_probability = 1.0;
  tight.crop_radius_min = 0.05;
  tight.crop_radius_max = 0.1;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const Demonstration c = random_crop(demo(), s, tight);
    bool near = false;
    for (const Vec3& p : c.cloud.positions) near = near || (p - c.interaction_point).norm() <= 0.005;
    ASSERT_TRUE(near) << s;
    if (s < 50) EXPECT_TRUE(subset(c.cloud, demo().cloud));
  }
}

TEST(Pipeline, FixedOrderRotationCropDropoutNoise) {
  AugmentConfig cfg;
  for (std::uint64_t s = 0; s < 20; ++s) {
    // A step is kept only while the label's token voxel stays populated.
    auto survives = [](const PointCloud& c, const Vec3& p) {
      const PointCloud tokens = grid_downsample(c, kTokenResolution);
      return (tokens.positions[nearest_index(tokens.positions, p)] - p).norm() <= kTokenDiagonal;
    };
    Demonstration expected = rotational_randomization(demo(), derive_seed(s, {1}), cfg);
    const Demonstration cropped = random_crop(expected, derive_seed(s, {2}), cfg);
    if (survives(cropped.cloud, cropped.interaction_point)) expected = cropped;
    const PointCloud dropped = elliptical_dropout(expected.cloud, derive_seed(s, {3}), cfg);
    if (survives(dropped, expected.interaction_point)) expected.cloud = dropped;
    const PointCloud noisy = additive_noise(expected.cloud, derive_seed(s, {4}), cfg);
    if (survives(noisy, expected.interaction_point)) expected.cloud = noisy;
    const Demonstration got = augment_interaction_sample(demo(), s, cfg);
    EXPECT_EQ(got.cloud.positions, expected.cloud.positions) << s;
    EXPECT_EQ(got.command, demo().command);
    EXPECT_EQ(serialize_episode(got), serialize_episode(augment_interaction_sample(demo(), s, cfg)));
  }
  cfg.enabled = false;
  EXPECT_EQ(serialize_episode(augment_interaction_sample(demo(), 1, cfg)), serialize_episode(demo()));
}

TEST(Jitter, CompensationPreservesAbsolutePositions) {
  const Crop crop{demo().cloud, demo().interaction_point};
  const ActionTriplet target = relative_actions(demo(), demo().interaction_point);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const JitteredCrop j = apm_offset_jitter(crop, target, s);
    worst = std::max(worst, j.offset.cwiseAbs().maxCoeff());
    if (s < 100) {
      for (int i = 0; i < 3; ++i) {
        const Vec3 before = crop.center + target.actions[i].delta_p;
        const Vec3 after = j.crop.center + j.target.actions[i].delta_p;
        EXPECT_LT((before - after).norm(), 1e-9);
      }
    }
  }
  EXPECT_LE(worst, 0.025);
  AugmentConfig zero;
  zero.apm_jitter = 0.0;
  const JitteredCrop id = apm_offset_jitter(crop, target, 3, zero);
  EXPECT_EQ(id.crop.center, crop.center);
  EXPECT_EQ(id.target.actions[0].delta_p, target.actions[0].delta_p);
}

}  // namespace
}  // namespace slap
