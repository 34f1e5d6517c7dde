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


#include "slap/augment.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "slap/errors.hpp"
#include "slap/random.hpp"

namespace slap {

namespace {

constexpr double kTokenResolution = 0.005;
const double kTokenDiagonal = kTokenResolution * std::sqrt(3.0);

PointCloud select(const PointCloud& cloud, const std::vector<char>& keep) {
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!keep[i]) continue;
    out.push_back(cloud.positions[i], cloud.colors[i], cloud.has_views() ? cloud.source_view[i] : -1);
  }
  if (!cloud.has_views()) out.source_view.clear();
  return out;
}

bool has_point_near(const PointCloud& cloud, const Vec3& p, double radius) {
  for (const auto& q : cloud.positions) {
    if ((q - p).squaredNorm() <= radius * radius) return true;
  }
  return false;
}

// The interaction point survives when its token voxel is still populated.
bool label_survives(const PointCloud& cloud, const Vec3& p) {
  const PointCloud tokens = grid_downsample(cloud, kTokenResolution);
  if (tokens.empty()) return false;
  return (tokens.positions[nearest_index(tokens.positions, p)] - p).norm() <= kTokenDiagonal;
}

}  // namespace

void AugmentConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("augment: ") + what);
  };
  check(rotation_max_deg >= 0, "rotation_max_deg must be >= 0");
  check(crop_probability >= 0 && crop_probability <= 1, "crop_probability must be in [0, 1]");
  check(crop_radius_min > 0 && crop_radius_max >= crop_radius_min, "crop radius range invalid");
  check(crop_center_std >= 0, "crop_center_std must be >= 0");
  check(crop_retries >= 1, "crop_retries must be >= 1");
  check(dropout_mean >= 0, "dropout_mean must be >= 0");
  check(ellipse_axis_min > 0 && ellipse_axis_max >= ellipse_axis_min, "ellipse axis range invalid");
  check(noise_std_min >= 0 && noise_std_max >= noise_std_min, "noise std range invalid");
  check(apm_center_std >= 0, "apm_center_std must be >= 0");
  check(apm_jitter >= 0, "apm_jitter must be >= 0");
}

PointCloud elliptical_dropout(const PointCloud& cloud, std::uint64_t seed, const AugmentConfig& cfg) {
  Rng rng(derive_seed(seed, {0xD0}));
  const int k = cfg.dropout_mean > 0 ? std::poisson_distribution<int>(cfg.dropout_mean)(rng) : 0;
  if (k == 0 || cloud.empty()) return cloud;
  std::vector<char> keep(cloud.size(), 1);
  std::size_t remaining = cloud.size();
  std::normal_distribution<double> n01;
  for (int e = 0; e < k; ++e) {
    // Random view direction; the ellipse lives in the plane orthogonal to it.
    Vec3 dir(n01(rng), n01(rng), n01(rng));
    if (dir.norm() < 1e-12) dir = Vec3::UnitZ();
    dir.normalize();
    const Vec3 u = dir.unitOrthogonal();
    const Vec3 v = dir.cross(u);
    double lo_u = INFINITY, hi_u = -INFINITY, lo_v = INFINITY, hi_v = -INFINITY;
    for (const auto& p : cloud.positions) {
      lo_u = std::min(lo_u, p.dot(u));
      hi_u = std::max(hi_u, p.dot(u));
      lo_v = std::min(lo_v, p.dot(v));
      hi_v = std::max(hi_v, p.dot(v));
    }
    const double cu = uniform(rng, lo_u, std::nextafter(hi_u, INFINITY));
    const double cv = uniform(rng, lo_v, std::nextafter(hi_v, INFINITY));
    const double a = uniform(rng, cfg.ellipse_axis_min, cfg.ellipse_axis_max);
    const double b = uniform(rng, cfg.ellipse_axis_min, cfg.ellipse_axis_max);
    const double phi = uniform(rng, 0.0, std::numbers::pi);
    const double c = std::cos(phi), s = std::sin(phi);
    std::vector<std::size_t> hit;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!keep[i]) continue;
      const double du = cloud.positions[i].dot(u) - cu, dv = cloud.positions[i].dot(v) - cv;
      const double x = c * du + s * dv, y = -s * du + c * dv;
      if ((x * x) / (a * a) + (y * y) / (b * b) <= 1.0) hit.push_back(i);
    }
    if (remaining - hit.size() < cfg.dropout_min_points) continue;
    for (std::size_t i : hit) keep[i] = 0;
    remaining -= hit.size();
  }
  return select(cloud, keep);
}

PointCloud additive_noise(const PointCloud& cloud, std::uint64_t seed, const AugmentConfig& cfg) {
  Rng rng(derive_seed(seed, {0x401}));
  const double sigma =
      cfg.noise_std_max > cfg.noise_std_min ? uniform(rng, cfg.noise_std_min, cfg.noise_std_max) : cfg.noise_std_min;
  if (sigma == 0.0) return cloud;
  PointCloud out = cloud;
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& p : out.positions) {
    for (int k = 0; k < 3; ++k) p[k] += noise(rng);
  }
  return out;
}

Demonstration rotate_demo(const Demonstration& demo, double angle) {
  if (angle == 0.0) return demo;
  const Vec3& pivot = demo.workspace_center;
  const UnitQuaternion r = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), angle);
  Demonstration out = demo;
  out.cloud = rotate_z(demo.cloud, angle, pivot);
  for (auto& kf : out.keyframes) {
    kf.position = rotate_z(kf.position, angle, pivot);
    kf.q = r * kf.q;
  }
  out.interaction_point = rotate_z(demo.interaction_point, angle, pivot);
  out.target_box = demo.target_box.rotated_z(angle, pivot);
  out.part_box = demo.part_box.rotated_z(angle, pivot);
  return out;
}

Demonstration rotational_randomization(const Demonstration& demo, std::uint64_t seed, const AugmentConfig& cfg) {
  Rng rng(derive_seed(seed, {0x207}));
  const double max = cfg.rotation_max_deg * std::numbers::pi / 180.0;
  return rotate_demo(demo, max > 0 ? uniform(rng, -max, max) : 0.0);
}

Demonstration random_crop(const Demonstration& demo, std::uint64_t seed, const AugmentConfig& cfg) {
  Rng rng(derive_seed(seed, {0xC20}));
  if (!std::bernoulli_distribution(cfg.crop_probability)(rng)) return demo;
  for (int attempt = 0; attempt < cfg.crop_retries; ++attempt) {
    const Vec3 delta(gaussian(rng, cfg.crop_center_std), gaussian(rng, cfg.crop_center_std),
                     gaussian(rng, cfg.crop_center_std));
    const double radius = uniform(rng, cfg.crop_radius_min, cfg.crop_radius_max);
    PointCloud cropped = crop_sphere(demo.cloud, demo.interaction_point + delta, radius);
    if (has_point_near(cropped, demo.interaction_point, kTokenResolution)) {
      Demonstration out = demo;
      out.cloud = std::move(cropped);
      return out;
    }
  }
  return demo;
}

Demonstration augment_interaction_sample(const Demonstration& demo, std::uint64_t seed, const AugmentConfig& cfg) {
  if (!cfg.enabled) return demo;
  Demonstration out = cfg.rotation ? rotational_randomization(demo, derive_seed(seed, {1}), cfg) : demo;
  {
    Demonstration cropped = random_crop(out, derive_seed(seed, {2}), cfg);
    if (label_survives(cropped.cloud, cropped.interaction_point)) out = std::move(cropped);
  }
  if (cfg.dropout) {
    PointCloud dropped = elliptical_dropout(out.cloud, derive_seed(seed, {3}), cfg);
    if (label_survives(dropped, out.interaction_point)) out.cloud = std::move(dropped);
  }
  if (cfg.noise) {
    PointCloud noisy = additive_noise(out.cloud, derive_seed(seed, {4}), cfg);
    if (label_survives(noisy, out.interaction_point)) out.cloud = std::move(noisy);
  }
  return out;
}

JitteredCrop apm_offset_jitter(const Crop& crop, const ActionTriplet& target, std::uint64_t seed,
                               const AugmentConfig& cfg) {
  Rng rng(derive_seed(seed, {0x717}));
  const double r = cfg.apm_jitter;
  const Vec3 offset = r > 0 ? Vec3(uniform(rng, -r, r), uniform(rng, -r, r), uniform(rng, -r, r)) : Vec3::Zero();
  JitteredCrop out{crop, target, offset};
  out.crop.center = crop.center + offset;
  for (auto& a : out.target.actions) a.delta_p = a.delta_p - offset;
  return out;
}

Vec3 noisy_crop_center(const Vec3& interaction_point, std::uint64_t seed, const AugmentConfig& cfg) {
  Rng rng(derive_seed(seed, {0xCE7}));
  const double s = cfg.apm_center_std;
  if (s == 0) return interaction_point;
  return interaction_point + Vec3(gaussian(rng, s), gaussian(rng, s), gaussian(rng, s));
}

}  // namespace slap
