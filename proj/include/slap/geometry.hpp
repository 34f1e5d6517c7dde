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

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace slap {

using Vec3 = Eigen::Vector3d;

/// Multi-view scene observation in the robot base frame. Lengths in meters,
/// colors in [0, 1]. `source_view` is either empty or one entry per point.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;
  std::vector<int> source_view;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool has_views() const { return !source_view.empty(); }

  void reserve(std::size_t n);
  void push_back(const Vec3& position, const Vec3& color, int view = -1);
  void append(const PointCloud& other);

  /// Throws InvalidArgument when lengths disagree or a coordinate is not finite.
  void validate() const;
};

/// Rotation with the double cover resolved to the w >= 0 hemisphere.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;
  /// Normalizes and canonicalizes; throws InvalidArgument on a zero or
  /// non-finite input.
  UnitQuaternion(double w, double x, double y, double z);
  explicit UnitQuaternion(const Eigen::Quaterniond& q);

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  Eigen::Quaterniond eigen() const { return {w_, x_, y_, z_}; }
  Eigen::Vector4d coeffs_wxyz() const { return {w_, x_, y_, z_}; }
  Vec3 rotate(const Vec3& v) const { return eigen() * v; }
  UnitQuaternion operator*(const UnitQuaternion& rhs) const;

  double dot(const UnitQuaternion& other) const {
    return w_ * other.w_ + x_ * other.x_ + y_ * other.y_ + z_ * other.z_;
  }

  friend bool operator==(const UnitQuaternion&, const UnitQuaternion&) = default;

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// One relative keyframe action: offset from the interaction point,
/// base-frame orientation and binary gripper command.
struct Action {
  Vec3 delta_p = Vec3::Zero();
  UnitQuaternion q;
  int g = 0;

  static constexpr double kMaxOffset = 0.5;
  void validate() const;
};

using VoxelKey = std::array<std::int64_t, 3>;

VoxelKey voxel_key(const Vec3& p, double resolution);

/// Result of bucketing points into a regular grid. Groups are ordered by
/// voxel key; `members[i]` lists input indices of group i.
struct VoxelGroups {
  std::vector<VoxelKey> keys;
  std::vector<std::vector<std::size_t>> members;
};

/// Buckets points by floor(p / resolution). Members of a group are listed in
/// a permutation-independent order (sorted by position, then color).
VoxelGroups voxel_groups(std::span<const Vec3> positions, double resolution,
                         std::span<const Vec3> colors = {});

/// Collapses each occupied voxel to the centroid of its members.
PointCloud voxelize(const PointCloud& cloud, double resolution);

/// 1 mm duplicate removal across overlapping views.
PointCloud dedup_voxelize(const PointCloud& cloud, double resolution = 0.001);

/// Token grid: the downsampled set P.
PointCloud grid_downsample(const PointCloud& cloud, double resolution = 0.005);

PointCloud crop_sphere(const PointCloud& cloud, const Vec3& center, double radius);

Vec3 rotate_z(const Vec3& p, double angle, const Vec3& pivot);
PointCloud rotate_z(const PointCloud& cloud, double angle, const Vec3& pivot);

/// Rotation angle between two orientations, in [0, pi]. Sign-invariant.
double quat_angle(const UnitQuaternion& a, const UnitQuaternion& b);

/// Index of the nearest position (lowest index on ties). Requires nonempty input.
std::size_t nearest_index(std::span<const Vec3> positions, const Vec3& query);

/// Rounds every coordinate and color to float32 precision.
void round_to_float(PointCloud& cloud);

}  // namespace slap
