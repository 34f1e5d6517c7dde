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


// Distance-error and interaction-accuracy evaluation for the pipeline
// variants used by the ablation harness.

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "slap/apm.hpp"
#include "slap/ipm.hpp"
#include "slap/train.hpp"

namespace slap {

enum class EvalVariant { Full, OracleIpm, NoCrop, PointnetOnly, IpmOnly };

const char* to_string(EvalVariant v);
EvalVariant eval_variant_from_string(const std::string& s);
/// Action-model input mode a variant requires (Cropped for ipm_only, unused).
ApmInput required_apm_input(EvalVariant v);

/// Error recorded for an episode whose crop came back empty.
inline constexpr double kFailureError = 1.0;

struct EvalRow {
  int task_id = 0;
  std::string task;
  int episodes = 0;
  int failures = 0;
  double mean_error = 0;       // meters, failures counted at kFailureError
  double mean_orientation = 0; // radians over non-failed episodes
  double accuracy = 0;         // interaction point inside the labeled part
};

struct EvalReport {
  std::string variant;
  std::vector<EvalRow> rows;  // one per task, ascending id
  EvalRow overall;
  std::map<std::string, std::string> provenance;

  std::string to_csv() const;
};

/// Interaction point predictor.
using InteractionFn = std::function<Vec3(const Demonstration&)>;

/// Action model interface: input selection, frame origin and prediction.
struct ActionModelFns {
  std::function<PointCloud(const PointCloud& scene, const Vec3& origin)> select_input;
  std::function<Vec3(const Demonstration&, const Vec3& interaction_point)> origin_for;
  std::function<ActionTriplet(const PointCloud& input, const Vec3& origin, const Demonstration&)> predict;
};

InteractionFn interaction_fn(const IpmModel& model);
ActionModelFns action_fns(const ApmModel& model);

/// Per episode, the mean over the three actions of |p_pred - p_expert|;
/// ipm_only reports |p_I - label| instead. `interaction` may be empty for
/// oracle_ipm and pointnet_only; `actions` may be empty for ipm_only.
EvalReport evaluate_distance_error(EpisodeList episodes, EvalVariant variant, const InteractionFn& interaction,
                                   const ActionModelFns& actions);
/// Model form; checks that the action model matches the variant.
EvalReport evaluate_distance_error(EpisodeList episodes, EvalVariant variant, const IpmModel* ipm,
                                   const ApmModel* apm);

/// Fraction of episodes whose predicted interaction point lies inside the
/// labeled part box.
EvalReport evaluate_interaction_accuracy(EpisodeList episodes, const InteractionFn& interaction);

}  // namespace slap
