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


#include "slap/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "slap/errors.hpp"
#include "slap/random.hpp"

namespace slap {

using ad::Matrix;
using ad::Tape;
using ad::Var;

void SetAbstractionConfig::validate() const {
  if (!(grid_resolution > 0)) throw ConfigError("set abstraction: grid_resolution must be positive");
  if (!(ball_radius >= grid_resolution)) throw ConfigError("set abstraction: ball_radius must be >= grid_resolution");
  if (max_neighbors < 1) throw ConfigError("set abstraction: max_neighbors must be >= 1");
  if (mlp_widths.empty()) throw ConfigError("set abstraction: mlp_widths is empty");
  for (int w : mlp_widths) {
    if (w < 1) throw ConfigError("set abstraction: mlp widths must be positive");
  }
}

void EncoderConfig::validate() const {
  fine.validate();
  coarse.validate();
  if (coarse.grid_resolution < fine.grid_resolution) {
    throw ConfigError("encoder: coarse grid must not be finer than the token grid");
  }
  if (dim < 2 || dim % 2 != 0) throw ConfigError("encoder: dim must be a positive even number");
  if (position_bands < 1) throw ConfigError("encoder: position_bands must be >= 1");
  if (!(max_period >= min_period && min_period > 0)) throw ConfigError("encoder: invalid period range");
}

namespace {

struct KeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    return static_cast<std::size_t>(
        mix64(static_cast<std::uint64_t>(k[0]) ^ mix64(static_cast<std::uint64_t>(k[1]) ^
                                                       mix64(static_cast<std::uint64_t>(k[2])))));
  }
};

std::uint64_t point_hash(const Vec3& p, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (int k = 0; k < 3; ++k) h = mix64(h ^ std::bit_cast<std::uint64_t>(p[k]));
  return h;
}

}  // namespace

Neighborhoods ball_query(std::span<const Vec3> points, std::span<const Vec3> centers, double radius,
                         int max_neighbors, std::uint64_t seed) {
  if (!(radius > 0)) throw InvalidArgument("ball_query: radius must be positive");
  if (max_neighbors < 1) throw InvalidArgument("ball_query: max_neighbors must be >= 1");
  // Neighbors are taken in ascending (hash, x, y, z, index) order, so the
  // kept subset depends only on point coordinates and the seed. Each cell is
  // pre-sorted in that order and the 27 cells around a center are merged.
  std::vector<std::uint64_t> hashes(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) hashes[i] = point_hash(points[i], seed);
  auto before = [&](int a, int b) {
    if (hashes[a] != hashes[b]) return hashes[a] < hashes[b];
    const Vec3 &pa = points[a], &pb = points[b];
    if (pa.x() != pb.x()) return pa.x() < pb.x();
    if (pa.y() != pb.y()) return pa.y() < pb.y();
    if (pa.z() != pb.z()) return pa.z() < pb.z();
    return a < b;
  };
  std::unordered_map<VoxelKey, std::vector<int>, KeyHash> grid;
  grid.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) grid[voxel_key(points[i], radius)].push_back(static_cast<int>(i));
  for (auto& [key, cell] : grid) std::sort(cell.begin(), cell.end(), before);

  Neighborhoods out;
  out.offsets.reserve(centers.size() + 1);
  out.offsets.push_back(0);
  const double r2 = radius * radius;
  struct Cursor {
    const int* next;
    const int* end;
  };
  std::vector<Cursor> heap;
  auto heap_less = [&](const Cursor& a, const Cursor& b) { return before(*b.next, *a.next); };
  for (const Vec3& c : centers) {
    heap.clear();
    const VoxelKey k = voxel_key(c, radius);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it != grid.end()) heap.push_back({it->second.data(), it->second.data() + it->second.size()});
        }
      }
    }
    std::make_heap(heap.begin(), heap.end(), heap_less);
    int taken = 0;
    while (!heap.empty() && taken < max_neighbors) {
      std::pop_heap(heap.begin(), heap.end(), heap_less);
      Cursor& cur = heap.back();
      const int i = *cur.next++;
      if ((points[i] - c).squaredNorm() <= r2) {
        out.members.push_back(i);
        ++taken;
      }
      if (cur.next == cur.end) {
        heap.pop_back();
      } else {
        std::push_heap(heap.begin(), heap.end(), heap_less);
      }
    }
    out.offsets.push_back(static_cast<int>(out.members.size()));
  }
  return out;
}

SetAbstraction::SetAbstraction(nn::ParameterStore& store, const std::string& name, int feature_dim,
                               SetAbstractionConfig cfg, Rng& rng)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  mlp_ = nn::Mlp(store, name + ".mlp", 3 + feature_dim, cfg_.mlp_widths, true, rng);
}

Var SetAbstraction::forward(Tape& tape, std::span<const Vec3> points, Var features, std::span<const Vec3> centers,
                            std::uint64_t seed) const {
  if (static_cast<std::size_t>(features.rows()) != points.size()) {
    throw InvalidArgument("SetAbstraction: one feature row per point required");
  }
  const Neighborhoods nb = ball_query(points, centers, cfg_.ball_radius, cfg_.max_neighbors, seed);
  const auto m = static_cast<Eigen::Index>(nb.members.size());
  Matrix rel(m, 3);
  for (std::size_t c = 0; c + 1 < nb.offsets.size(); ++c) {
    for (int r = nb.offsets[c]; r < nb.offsets[c + 1]; ++r) {
      rel.row(r) = ((points[nb.members[r]] - centers[c]) / cfg_.ball_radius).transpose();
    }
  }
  const Var parts[] = {tape.constant(std::move(rel)), ad::gather_rows(features, nb.members)};
  const Var pooled = ad::segment_max(mlp_.forward(tape, ad::concat_cols(parts)), nb.offsets);
  return pooled;
}

AbstractedCloud modified_set_abstraction(Tape& tape, const PointCloud& cloud, const SetAbstraction& layer,
                                         std::uint64_t seed) {
  if (cloud.empty()) throw EmptyCloud("set abstraction of an empty cloud");
  AbstractedCloud out;
  out.centers = grid_downsample(cloud, layer.config().grid_resolution).positions;
  Matrix colors(static_cast<Eigen::Index>(cloud.size()), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) colors.row(static_cast<Eigen::Index>(i)) = cloud.colors[i].transpose();
  out.features = layer.forward(tape, cloud.positions, tape.constant(std::move(colors)), out.centers, seed);
  return out;
}

Matrix spatial_position_features(std::span<const Vec3> points, int bands, double max_period, double min_period) {
  Matrix out(static_cast<Eigen::Index>(points.size()), 6 * bands);
  const double ratio = bands > 1 ? std::pow(max_period / min_period, 1.0 / (bands - 1)) : 1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      double period = max_period;
      for (int b = 0; b < bands; ++b, period /= ratio) {
        const double phase = 2.0 * std::numbers::pi * points[i][axis] / period;
        const Eigen::Index col = (axis * bands + b) * 2;
        out(static_cast<Eigen::Index>(i), col) = std::sin(phase);
        out(static_cast<Eigen::Index>(i), col + 1) = std::cos(phase);
      }
    }
  }
  return out;
}

Matrix index_position_features(int count, int dim) {
  Matrix out(count, dim);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < dim / 2; ++j) {
      const double freq = std::pow(10000.0, -2.0 * j / dim);
      out(i, 2 * j) = std::sin(i * freq);
      out(i, 2 * j + 1) = std::cos(i * freq);
    }
  }
  return out;
}

TwoScaleEncoder::TwoScaleEncoder(nn::ParameterStore& store, const std::string& name, const EncoderConfig& cfg,
                                 Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  fine_ = SetAbstraction(store, name + ".fine", 3, cfg_.fine, rng);
  coarse_ = SetAbstraction(store, name + ".coarse", fine_.out_dim(), cfg_.coarse, rng);
  project_ = nn::Linear(store, name + ".project", fine_.out_dim() + coarse_.out_dim(), cfg_.dim, rng);
}

SpatialTokens TwoScaleEncoder::forward(Tape& tape, const PointCloud& cloud) const {
  AbstractedCloud fine = modified_set_abstraction(tape, cloud, fine_, cfg_.neighbor_seed);
  // Coarse voxels over the fine centers; parent[i] is the coarse voxel holding center i.
  const VoxelGroups groups = voxel_groups(fine.centers, cfg_.coarse.grid_resolution);
  std::vector<Vec3> coarse_centers;
  std::vector<int> parent(fine.centers.size());
  coarse_centers.reserve(groups.keys.size());
  for (std::size_t g = 0; g < groups.keys.size(); ++g) {
    Vec3 sum = Vec3::Zero();
    for (std::size_t i : groups.members[g]) {
      sum += fine.centers[i];
      parent[i] = static_cast<int>(g);
    }
    coarse_centers.push_back(sum * (1.0 / static_cast<double>(groups.members[g].size())));
  }
  const Var coarse =
      coarse_.forward(tape, fine.centers, fine.features, coarse_centers, derive_seed(cfg_.neighbor_seed, {1}));
  const Var parts[] = {fine.features, ad::gather_rows(coarse, parent)};
  return {std::move(fine.centers), project_.forward(tape, ad::concat_cols(parts))};
}

WordEmbedding::WordEmbedding(nn::ParameterStore& store, const std::string& name, int table_size, int dim, Rng& rng)
    : table_(&store.create(name + ".table", table_size, dim)), dim_(dim) {
  nn::init_normal(*table_, rng, 0.1);
}

Var WordEmbedding::forward(Tape& tape, std::span<const int> ids) const {
  for (int id : ids) {
    if (id < 0 || id >= table_->value.rows()) throw InvalidArgument("word id outside the embedding table");
  }
  const Var words = ad::gather_rows(tape.parameter(*table_), ids);
  return ad::add(words, tape.constant(index_position_features(static_cast<int>(ids.size()), dim_)));
}

}  // namespace slap
