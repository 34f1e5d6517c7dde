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


// Independent reference implementations used by the unit and acceptance
// tests. They share no code with the library beyond its plain data types.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "slap/geometry.hpp"
#include "slap/scenegen.hpp"

namespace slap::oracle {

using Key = std::array<long long, 3>;

inline Key cell_of(const Vec3& p, double res) {
  return {static_cast<long long>(std::floor(p.x() / res)), static_cast<long long>(std::floor(p.y() / res)),
          static_cast<long long>(std::floor(p.z() / res))};
}

/// Brute-force bucketing: ordered map from cell to sorted member indices.
inline std::map<Key, std::vector<std::size_t>> buckets(const std::vector<Vec3>& pts, double res) {
  std::map<Key, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < pts.size(); ++i) out[cell_of(pts[i], res)].push_back(i);
  return out;
}

/// Random cloud with clustered and uniform parts so that cells receive
/// between one and many points.
inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent), c(0.0, 1.0);
  std::normal_distribution<double> g(0.0, extent * 0.01);
  PointCloud cloud;
  Vec3 anchor(u(rng), u(rng), u(rng));
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 7 == 0) anchor = Vec3(u(rng), u(rng), u(rng));
    const Vec3 p = (i % 2 == 0) ? Vec3(u(rng), u(rng), u(rng)) : Vec3(anchor + Vec3(g(rng), g(rng), g(rng)));
    cloud.push_back(p, Vec3(c(rng), c(rng), c(rng)));
  }
  cloud.source_view.clear();
  return cloud;
}

/// Cross-entropy against token t plus (w/|P|) times the softmax-weighted
/// squared distance to token t, by direct summation in long double.
struct IpmLossValue {
  double cross_entropy, locality, total;
};

inline IpmLossValue ipm_loss(const std::vector<double>& f, const std::vector<Vec3>& pts, std::size_t t, double w) {
  long double z = 0;
  for (double v : f) z += std::exp(static_cast<long double>(v));
  long double loc = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const long double dx = pts[k].x() - pts[t].x(), dy = pts[k].y() - pts[t].y(), dz = pts[k].z() - pts[t].z();
    loc += std::exp(static_cast<long double>(f[k])) / z * (dx * dx + dy * dy + dz * dz);
  }
  const long double ce = -std::log(std::exp(static_cast<long double>(f[t])) / z);
  const long double total = ce + static_cast<long double>(w) / static_cast<long double>(f.size()) * loc;
  return {static_cast<double>(ce), static_cast<double>(loc), static_cast<double>(total)};
}

/// Weighted position, orientation and gripper terms summed over actions.
inline double apm_loss(const std::array<Vec3, 3>& dp, const std::array<Eigen::Vector4d, 3>& q,
                       const std::array<double, 3>& logit, const ActionTriplet& target, double lp, double lq,
                       double lg, bool squared) {
  long double total = 0;
  for (int i = 0; i < 3; ++i) {
    long double pos = 0;
    for (int a = 0; a < 3; ++a) {
      const long double d = static_cast<long double>(dp[i][a]) - target.actions[i].delta_p[a];
      pos += d * d;
    }
    const UnitQuaternion& tq = target.actions[i].q;
    const long double dot = q[i][0] * static_cast<long double>(tq.w()) + q[i][1] * static_cast<long double>(tq.x()) +
                            q[i][2] * static_cast<long double>(tq.y()) + q[i][3] * static_cast<long double>(tq.z());
    const long double ori = squared ? 1 - dot * dot : 1 - dot;
    const long double p = 1 / (1 + std::exp(-static_cast<long double>(logit[i])));
    const long double y = target.actions[i].g;
    const long double bce = -(y * std::log(p) + (1 - y) * std::log(1 - p));
    total += lp * pos + lq * ori + lg * bce;
  }
  return static_cast<double>(total);
}

}  // namespace slap::oracle
