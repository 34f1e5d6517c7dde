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


// Interaction prediction: per-token scores over the token set P, the
// locality-regularized classification loss, and mask export.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slap/backbone.hpp"
#include "slap/encoder.hpp"
#include "slap/language.hpp"
#include "slap/scenegen.hpp"

namespace slap {

inline constexpr double kTokenResolution = 0.005;
/// Largest accepted distance between a label and its token.
inline const double kTokenDiagonal = kTokenResolution * 1.7320508075688772;

struct InteractionPrediction {
  std::vector<double> scores;
  std::vector<Vec3> points;
  int index = 0;
  Vec3 point = Vec3::Zero();
  /// Indices of the ceil(5%) highest scores, best first.
  std::vector<int> top_mask;
};

/// Argmax (lowest index on ties) and the top-5% mask.
InteractionPrediction make_prediction(std::vector<double> scores, std::vector<Vec3> points);

/// Index of the token nearest to `target`; TargetNotInP beyond `max_distance`.
int snap_to_tokens(std::span<const Vec3> points, const Vec3& target, double max_distance = kTokenDiagonal);

/// Softmax-weighted mean of squared distances from each point to `target`.
double locality_loss(std::span<const double> scores, std::span<const Vec3> points, const Vec3& target);

struct IpmLossParts {
  double cross_entropy = 0.0;
  double locality = 0.0;
  double total = 0.0;
};

/// Cross-entropy against the token nearest `target` plus
/// (weight / |P|) * locality loss measured from that token.
IpmLossParts ipm_loss(std::span<const double> scores, std::span<const Vec3> points, const Vec3& target,
                      double weight);

/// Differentiable form of ipm_loss for a |P| x 1 score column.
ad::Var ipm_loss(ad::Var scores, std::span<const Vec3> points, int target_index, double weight,
                 IpmLossParts* parts = nullptr);

struct IpmConfig {
  EncoderConfig encoder;
  BackboneConfig backbone;
  std::vector<int> proprio_hidden{64};

  void validate() const;
};

class IpmModel {
 public:
  struct Output {
    std::vector<Vec3> points;
    ad::Var scores;  // |P| x 1
    int language_tokens = 0;
  };

  IpmModel(const IpmConfig& cfg, Vocabulary vocab, std::uint64_t seed);
  IpmModel(const IpmModel&) = delete;
  IpmModel& operator=(const IpmModel&) = delete;

  /// Sequence: spatial tokens, then command words, then one proprio token.
  Output forward(ad::Tape& tape, const PointCloud& cloud, const std::string& command,
                 const ProprioState& state) const;
  InteractionPrediction predict(const PointCloud& cloud, const std::string& command,
                                const ProprioState& state) const;
  InteractionPrediction predict(const Demonstration& demo) const;

  /// Word embeddings of `command` (one row per word).
  ad::Matrix embed_language(const std::string& command) const;

  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  const IpmConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }

 private:
  IpmConfig cfg_;
  Vocabulary vocab_;
  nn::ParameterStore store_;
  TwoScaleEncoder encoder_;
  nn::Linear position_;
  WordEmbedding words_;
  nn::Mlp proprio_;
  ad::Parameter* segments_ = nullptr;  // rows: spatial, language, proprio
  Backbone backbone_;
  ScoreHead head_;
};

/// PLY of the token cloud with the top-mask tokens red and a small yellow
/// marker around the argmax. Labels: 0 other, 1 mask, 2 marker.
void export_attention(const InteractionPrediction& pred, const PointCloud& tokens,
                      const std::filesystem::path& path);

}  // namespace slap
