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


// Training loops for the interaction and action models: seeded shuffling,
// per-sample Adam steps, validation after every epoch and reset to the best
// parameters (and optimizer moments) when validation does not improve.

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slap/apm.hpp"
#include "slap/config.hpp"
#include "slap/ipm.hpp"

namespace slap {

using EpisodeList = std::span<const Demonstration* const>;

struct IpmEpochRow {
  int epoch = 0;
  double train_ce = 0, train_locality = 0;
  double val_ce = 0, val_accuracy = 0, val_mean_dist = 0;
  double val_loss = 0;
  bool reset = false;
};

struct ApmEpochRow {
  int epoch = 0;
  double loss_position = 0, loss_orientation = 0, loss_gripper = 0;
  double val_position_error = 0, val_orientation_error = 0, val_gripper_accuracy = 0;
  double val_loss = 0;
  bool reset = false;
};

template <typename Row>
struct TrainResult {
  std::vector<Row> rows;
  int best_epoch = 0;
  double best_val_loss = 0;
};

struct TrainHooks {
  /// Called after every epoch with a one-line summary.
  std::function<void(const std::string&)> log;
  /// Called after every epoch with its row; returning true ends training.
  std::function<bool(const IpmEpochRow&)> ipm_epoch_end;
  std::function<bool(const ApmEpochRow&)> apm_epoch_end;
};

/// Unaugmented interaction metrics over a set of episodes.
struct IpmMetrics {
  double cross_entropy = 0;
  double locality = 0;  // mean softmax-weighted squared distance to the label
  double loss = 0;
  double accuracy = 0;   // argmax equals the label token
  double mean_dist = 0;  // mean distance from argmax to the label (m)
};

IpmMetrics evaluate_ipm(const IpmModel& model, EpisodeList episodes, double locality_weight);

struct ApmMetrics {
  double loss = 0;
  double position_error = 0;     // mean |dp - dp*| over actions (m)
  double orientation_error = 0;  // mean quaternion angle (rad)
  double gripper_accuracy = 0;
};

/// Action metrics with the label interaction point as crop center.
ApmMetrics evaluate_apm(const ApmModel& model, EpisodeList episodes, const LossConfig& loss);

TrainResult<IpmEpochRow> train_ipm(IpmModel& model, EpisodeList train, EpisodeList val, const SlapConfig& cfg,
                                   const TrainHooks& hooks = {});
TrainResult<ApmEpochRow> train_apm(ApmModel& model, EpisodeList train, EpisodeList val, const SlapConfig& cfg,
                                   const TrainHooks& hooks = {});

std::string ipm_csv(const std::vector<IpmEpochRow>& rows);
std::string apm_csv(const std::vector<ApmEpochRow>& rows);

}  // namespace slap
