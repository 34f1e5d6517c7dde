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


// Point-cloud tokenization: voxel-grid set abstraction, the two-scale
// spatial encoder, word embeddings and positional encodings.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slap/geometry.hpp"
#include "slap/nn.hpp"

namespace slap {

struct SetAbstractionConfig {
  double grid_resolution = 0.005;
  double ball_radius = 0.05;
  /// Neighbors kept per center; larger balls are subsampled by a seeded
  /// hash of point coordinates, so the choice does not depend on input order.
  int max_neighbors = 16;
  std::vector<int> mlp_widths{64, 64, 128};

  void validate() const;
};

/// Neighbor index lists in CSR form: members of center c are
/// members[offsets[c] .. offsets[c+1]).
struct Neighborhoods {
  std::vector<int> offsets;
  std::vector<int> members;
};

/// Points within `radius` of each center, found through a hash grid with
/// cells of size `radius`.
Neighborhoods ball_query(std::span<const Vec3> points, std::span<const Vec3> centers, double radius,
                         int max_neighbors, std::uint64_t seed);

/// Voxel-grid set abstraction: gathers each center's ball, expresses
/// neighbors relative to the center (scaled by 1 / ball_radius) next to
/// their features, applies a shared MLP and max-pools per center.
class SetAbstraction {
 public:
  SetAbstraction() = default;
  SetAbstraction(nn::ParameterStore& store, const std::string& name, int feature_dim, SetAbstractionConfig cfg,
                 Rng& rng);

  /// `features` has one row per point. Returns one row per center.
  ad::Var forward(ad::Tape& tape, std::span<const Vec3> points, ad::Var features, std::span<const Vec3> centers,
                  std::uint64_t seed) const;

  const SetAbstractionConfig& config() const { return cfg_; }
  int out_dim() const { return mlp_.out(); }

 private:
  SetAbstractionConfig cfg_;
  nn::Mlp mlp_;
};

struct AbstractedCloud {
  std::vector<Vec3> centers;
  ad::Var features;
};

/// Centers are grid_downsample(cloud, grid_resolution); colors are the point
/// features. Throws EmptyCloud for an empty cloud.
AbstractedCloud modified_set_abstraction(ad::Tape& tape, const PointCloud& cloud, const SetAbstraction& layer,
                                         std::uint64_t seed);

struct EncoderConfig {
  SetAbstractionConfig fine{0.005, 0.02, 16, {64, 64, 128}};
  SetAbstractionConfig coarse{0.05, 0.2, 16, {64, 64, 128}};
  int dim = 128;
  int position_bands = 6;
  double max_period = 8.0;
  double min_period = 0.02;
  std::uint64_t neighbor_seed = 0x5eed;

  void validate() const;
};

/// Per-axis sin/cos features at `bands` periods spaced geometrically from
/// max_period down to min_period. One row per point, 6 * bands columns.
ad::Matrix spatial_position_features(std::span<const Vec3> points, int bands, double max_period, double min_period);

/// Standard sinusoidal encoding of sequence indices 0..count-1.
ad::Matrix index_position_features(int count, int dim);

struct SpatialTokens {
  std::vector<Vec3> points;  // the token set P
  ad::Var features;          // |P| x dim
};

/// Fine SA layer over the raw cloud, coarse SA layer over the fine centers,
/// coarse features copied to the fine centers inside each coarse voxel,
/// concatenated and projected to `dim`.
class TwoScaleEncoder {
 public:
  TwoScaleEncoder() = default;
  TwoScaleEncoder(nn::ParameterStore& store, const std::string& name, const EncoderConfig& cfg, Rng& rng);

  SpatialTokens forward(ad::Tape& tape, const PointCloud& cloud) const;

 private:
  EncoderConfig cfg_;
  SetAbstraction fine_;
  SetAbstraction coarse_;
  nn::Linear project_;
};

/// Learned word table with an unknown-word row at index 0, plus a sinusoidal
/// encoding of each word's position in the command.
class WordEmbedding {
 public:
  WordEmbedding() = default;
  WordEmbedding(nn::ParameterStore& store, const std::string& name, int table_size, int dim, Rng& rng);

  ad::Var forward(ad::Tape& tape, std::span<const int> ids) const;

 private:
  ad::Parameter* table_ = nullptr;
  int dim_ = 0;
};

}  // namespace slap
