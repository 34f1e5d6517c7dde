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

#include "slap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "slap/errors.hpp"

namespace slap {

void PointCloud::reserve(std::size_t n) {
  positions.reserve(n);
  colors.reserve(n);
}

void PointCloud::push_back(const Vec3& position, const Vec3& color, int view) {
  if (view >= 0 && source_view.size() != positions.size()) {
    throw InvalidArgument("PointCloud::push_back: mixing points with and without view index");
  }
  positions.push_back(position);
  colors.push_back(color);
  if (view >= 0) source_view.push_back(view);
}

void PointCloud::append(const PointCloud& other) {
  const bool views = (empty() || has_views()) && other.has_views();
  if (!views) source_view.clear();
  positions.insert(positions.end(), other.positions.begin(), other.positions.end());
  colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  if (views) source_view.insert(source_view.end(), other.source_view.begin(), other.source_view.end());
}

void PointCloud::validate() const {
  if (positions.size() != colors.size()) {
    throw InvalidArgument("PointCloud: positions/colors length mismatch");
  }
  if (!source_view.empty() && source_view.size() != positions.size()) {
    throw InvalidArgument("PointCloud: source_view length mismatch");
  }
  for (const auto& p : positions) {
    if (!p.allFinite()) throw InvalidArgument("PointCloud: non-finite coordinate");
  }
}

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n == 0.0) {
    throw InvalidArgument("UnitQuaternion: zero or non-finite input");
  }
  const double s = (w < 0.0 ? -1.0 : 1.0) / n;
  w_ = w * s;
  x_ = x * s;
  y_ = y * s;
  z_ = z * s;
}

UnitQuaternion::UnitQuaternion(const Eigen::Quaterniond& q)
    : UnitQuaternion(q.w(), q.x(), q.y(), q.z()) {}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  return UnitQuaternion(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& rhs) const {
  return UnitQuaternion(eigen() * rhs.eigen());
}

void Action::validate() const {
  if (g != 0 && g != 1) throw InvalidArgument("Action: gripper command must be 0 or 1");
  if (!delta_p.allFinite() || delta_p.norm() > kMaxOffset) {
    throw InvalidArgument("Action: |delta_p| exceeds workspace bound");
  }
}

VoxelKey voxel_key(const Vec3& p, double resolution) {
  return {static_cast<std::int64_t>(std::floor(p.x() / resolution)),
          static_cast<std::int64_t>(std::floor(p.y() / resolution)),
          static_cast<std::int64_t>(std::floor(p.z() / resolution))};
}

VoxelGroups voxel_groups(std::span<const Vec3> positions, double resolution,
                         std::span<const Vec3> colors) {
  if (!(resolution > 0.0)) throw InvalidArgument("voxel_groups: resolution must be positive");
  const bool with_colors = colors.size() == positions.size();
  const std::size_t n = positions.size();
  std::vector<VoxelKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = voxel_key(positions[i], resolution);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto tie = [&](std::size_t i) {
    const Vec3& p = positions[i];
    const Vec3 c = with_colors ? colors[i] : Vec3::Zero();
    return std::tuple(keys[i], p.x(), p.y(), p.z(), c.x(), c.y(), c.z());
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return tie(a) < tie(b); });

  VoxelGroups out;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    if (out.keys.empty() || out.keys.back() != keys[i]) {
      out.keys.push_back(keys[i]);
      out.members.emplace_back();
    }
    out.members.back().push_back(i);
  }
  return out;
}

PointCloud voxelize(const PointCloud& cloud, double resolution) {
  cloud.validate();
  const VoxelGroups groups = voxel_groups(cloud.positions, resolution, cloud.colors);
  PointCloud out;
  out.reserve(groups.keys.size());
  for (const auto& members : groups.members) {
    Vec3 p = Vec3::Zero();
    Vec3 c = Vec3::Zero();
    for (std::size_t i : members) {
      p += cloud.positions[i];
      c += cloud.colors[i];
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    out.positions.push_back(p * inv);
    out.colors.push_back(c * inv);
    if (cloud.has_views()) out.source_view.push_back(cloud.source_view[members.front()]);
  }
  return out;
}

PointCloud dedup_voxelize(const PointCloud& cloud, double resolution) {
  return voxelize(cloud, resolution);
}

PointCloud grid_downsample(const PointCloud& cloud, double resolution) {
  return voxelize(cloud, resolution);
}

PointCloud crop_sphere(const PointCloud& cloud, const Vec3& center, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("crop_sphere: radius must be positive");
  PointCloud out;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if ((cloud.positions[i] - center).squaredNorm() <= r2) {
      out.positions.push_back(cloud.positions[i]);
      out.colors.push_back(cloud.colors[i]);
      if (cloud.has_views()) out.source_view.push_back(cloud.source_view[i]);
    }
  }
  return out;
}

Vec3 rotate_z(const Vec3& p, double angle, const Vec3& pivot) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double dx = p.x() - pivot.x();
  const double dy = p.y() - pivot.y();
  return {pivot.x() + c * dx - s * dy, pivot.y() + s * dx + c * dy, p.z()};
}

PointCloud rotate_z(const PointCloud& cloud, double angle, const Vec3& pivot) {
  PointCloud out = cloud;
  for (auto& p : out.positions) p = rotate_z(p, angle, pivot);
  return out;
}

double quat_angle(const UnitQuaternion& a, const UnitQuaternion& b) {
  const double d = a.dot(b);
  return std::acos(std::clamp(2.0 * d * d - 1.0, -1.0, 1.0));
}

std::size_t nearest_index(std::span<const Vec3> positions, const Vec3& query) {
  if (positions.empty()) throw InvalidArgument("nearest_index: empty point set");
  std::size_t best = 0;
  double best_d = (positions[0] - query).squaredNorm();
  for (std::size_t i = 1; i < positions.size(); ++i) {
    const double d = (positions[i] - query).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

void round_to_float(PointCloud& cloud) {
  // Flat loop: GCC 11 at -O3 miscompiles the per-Vec3 form (the SLP
  // vectorizer drops the rounding on trailing elements).
  auto round = [](std::vector<Vec3>& v) {
    double* d = v.empty() ? nullptr : v.front().data();
    for (std::size_t i = 0; i < 3 * v.size(); ++i) d[i] = static_cast<double>(static_cast<float>(d[i]));
  };
  round(cloud.positions);
  round(cloud.colors);
}

}  // namespace slap
