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


// Scene augmentations for interaction training and crop-offset jitter for
// action training. Every function is deterministic in its seed.

#pragma once

#include <cstdint>

#include "slap/geometry.hpp"
#include "slap/scenegen.hpp"

namespace slap {

struct AugmentConfig {
  bool enabled = true;

  bool rotation = true;
  double rotation_max_deg = 45.0;

  double crop_probability = 0.75;
  double crop_radius_min = 1.0;
  double crop_radius_max = 2.0;
  double crop_center_std = 0.1;
  int crop_retries = 10;

  bool dropout = true;
  double dropout_mean = 10.0;
  double ellipse_axis_min = 0.005;
  double ellipse_axis_max = 0.03;
  std::size_t dropout_min_points = 256;

  bool noise = true;
  double noise_std_min = 0.0005;
  double noise_std_max = 0.003;

  /// Gaussian noise on the action-model crop center.
  double apm_center_std = 0.01;
  /// Half-width of the uniform crop-center jitter cube.
  double apm_jitter = 0.025;

  void validate() const;
};

/// Removes points whose projection onto a random view plane falls inside
/// one of Poisson(dropout_mean) random ellipses. An ellipse that would leave
/// fewer than dropout_min_points points is skipped.
PointCloud elliptical_dropout(const PointCloud& cloud, std::uint64_t seed, const AugmentConfig& cfg = {});

/// Adds i.i.d. Gaussian offsets with a per-call std drawn from
/// [noise_std_min, noise_std_max].
PointCloud additive_noise(const PointCloud& cloud, std::uint64_t seed, const AugmentConfig& cfg = {});

/// Rotates the cloud and every label of `demo` about the vertical axis
/// through the workspace center.
Demonstration rotate_demo(const Demonstration& demo, double angle);
/// rotate_demo with an angle uniform in +-rotation_max_deg.
Demonstration rotational_randomization(const Demonstration& demo, std::uint64_t seed, const AugmentConfig& cfg = {});

/// With probability crop_probability keeps the points within a random
/// radius of a jittered interaction point; draws that lose the interaction
/// point's neighborhood are retried, then skipped.
Demonstration random_crop(const Demonstration& demo, std::uint64_t seed, const AugmentConfig& cfg = {});

/// Training-time augmentation of an interaction sample in the fixed order
/// rotation, crop, dropout, noise. A step that leaves no point within one
/// token-voxel diagonal of the interaction point is dropped for this sample.
Demonstration augment_interaction_sample(const Demonstration& demo, std::uint64_t seed, const AugmentConfig& cfg);

/// Cropped action-model input: absolute points plus the frame origin.
struct Crop {
  PointCloud cloud;
  Vec3 center = Vec3::Zero();
};

struct JitteredCrop {
  Crop crop;
  ActionTriplet target;
  Vec3 offset = Vec3::Zero();
};

/// Shifts the crop center by a uniform offset in the jitter cube and
/// compensates every delta_p so absolute keyframe positions are unchanged.
JitteredCrop apm_offset_jitter(const Crop& crop, const ActionTriplet& target, std::uint64_t seed,
                               const AugmentConfig& cfg = {});

/// Training crop center: interaction point plus N(0, apm_center_std) noise.
Vec3 noisy_crop_center(const Vec3& interaction_point, std::uint64_t seed, const AugmentConfig& cfg = {});

}  // namespace slap
