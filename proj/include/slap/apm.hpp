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


// Relative action prediction: encodes the points around an origin and
// regresses, per action, an offset from that origin, an orientation and a
// gripper command predicted from proprioception alone.

#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "slap/encoder.hpp"
#include "slap/language.hpp"
#include "slap/scenegen.hpp"

namespace slap {

struct ApmLossWeights {
  double position = 1.0;
  double orientation = 1e-2;
  double gripper = 1e-4;

  void validate() const;
};

/// What the action model sees and what its offsets are relative to.
enum class ApmInput {
  Cropped,    // points within crop_radius of the interaction point
  FullScene,  // whole scene, offsets relative to the interaction point
  Absolute,   // whole scene, offsets relative to the workspace center
};

const char* to_string(ApmInput input);
ApmInput apm_input_from_string(const std::string& s);

struct ApmConfig {
  ApmInput input = ApmInput::Cropped;
  double crop_radius = 0.1;
  SetAbstractionConfig local{0.01, 0.025, 16, {32, 32, 64}};
  SetAbstractionConfig wide{0.04, 0.1, 16, {64, 64, 128}};
  std::vector<int> global_mlp{128, 256};
  std::vector<int> head_hidden{128, 64};
  std::vector<int> gripper_hidden{32, 32};
  /// Offsets are predicted in units of this length.
  double position_scale = 0.1;
  /// One encoder trunk per action instead of a shared one.
  bool separate_trunks = false;
  /// Width of the pooled command embedding fed to the position and
  /// orientation heads; 0 disables command conditioning.
  int language_dim = 32;
  std::uint64_t neighbor_seed = 0xa9e;

  void validate() const;
};

/// Raw differentiable outputs for the three actions.
struct ApmOutput {
  std::array<ad::Var, 3> delta_p;      // 1 x 3, meters
  std::array<ad::Var, 3> orientation;  // 1 x 4 unit (w, x, y, z), w >= 0
  std::array<ad::Var, 3> grip_logit;   // 1 x 1
};

/// Plain-value view of ApmOutput.
struct ApmRawPrediction {
  std::array<Vec3, 3> delta_p;
  std::array<Eigen::Vector4d, 3> orientation;
  std::array<double, 3> grip_logit{};
};

struct ApmLossParts {
  double position = 0.0;     // sum over actions of |dp - dp*|^2
  double orientation = 0.0;  // sum over actions of the orientation term
  double gripper = 0.0;      // sum over actions of the binary cross-entropy
  double total = 0.0;        // weighted sum
};

/// Orientation term 1 - <q, q*>^2, or 1 - <q, q*> with `squared_orientation`
/// false.
ApmLossParts apm_loss(const ApmRawPrediction& pred, const ActionTriplet& target, const ApmLossWeights& weights,
                      bool squared_orientation = true);
ad::Var apm_loss(const ApmOutput& pred, const ActionTriplet& target, const ApmLossWeights& weights,
                 bool squared_orientation = true, ApmLossParts* parts = nullptr);

/// Absolute keyframe poses p = origin + delta_p.
std::array<Keyframe, 3> assemble_absolute(const ActionTriplet& pred, const Vec3& origin);

class ApmModel {
 public:
  /// `vocab` maps command words to embedding rows; words outside it share
  /// the unknown row.
  ApmModel(const ApmConfig& cfg, Vocabulary vocab, std::uint64_t seed);
  ApmModel(const ApmModel&) = delete;
  ApmModel& operator=(const ApmModel&) = delete;

  /// Points the model sees for a scene and origin; EmptyCrop when nothing
  /// lies inside the crop.
  PointCloud select_input(const PointCloud& scene, const Vec3& origin) const;
  /// Frame origin for a scene given an interaction point.
  Vec3 origin_for(const Demonstration& demo, const Vec3& interaction_point) const;

  /// `input` holds absolute points; they are expressed relative to `origin`.
  ApmOutput forward(ad::Tape& tape, const PointCloud& input, const Vec3& origin,
                    const std::array<ProprioState, 3>& proprio, std::string_view command) const;
  ApmRawPrediction raw_predict(const PointCloud& input, const Vec3& origin, const std::array<ProprioState, 3>& proprio,
                               std::string_view command) const;
  /// Offsets relative to `origin`, canonical unit quaternions, g = sigmoid >= 0.5.
  ActionTriplet predict(const PointCloud& input, const Vec3& origin, const std::array<ProprioState, 3>& proprio,
                        std::string_view command) const;

  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  const ApmConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }

 private:
  struct Trunk {
    SetAbstraction local, wide;
    nn::Mlp global;
  };
  ad::Var encode(ad::Tape& tape, const Trunk& trunk, const PointCloud& input, const Vec3& origin) const;

  ApmConfig cfg_;
  Vocabulary vocab_;
  nn::ParameterStore store_;
  std::vector<Trunk> trunks_;
  ad::Parameter* words_ = nullptr;
  std::array<nn::Mlp, 3> position_heads_;
  std::array<nn::Mlp, 3> orientation_heads_;
  std::array<nn::Mlp, 3> gripper_heads_;
};

}  // namespace slap
