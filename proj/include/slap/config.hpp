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


// Versioned JSON configuration with sections model, train, augment, loss.
// Missing keys keep their defaults; unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "slap/apm.hpp"
#include "slap/augment.hpp"
#include "slap/ipm.hpp"

namespace slap {

inline constexpr int kConfigVersion = 1;

struct TrainConfig {
  int epochs = 85;
  int batch_size = 1;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  bool validation_reset = true;
  /// "none" or "step" (multiply by lr_decay every lr_step_epochs).
  std::string lr_schedule = "none";
  int lr_step_epochs = 20;
  double lr_decay = 0.5;
  /// Task ids to train on; empty means all tasks in the dataset.
  std::vector<int> tasks;

  void validate() const;
};

struct LossConfig {
  double locality_weight = 1.0;
  ApmLossWeights apm;
  bool squared_orientation = true;

  void validate() const;
};

struct ModelConfig {
  IpmConfig ipm;
  ApmConfig apm;
  std::uint64_t init_seed = 1;
};

struct SlapConfig {
  ModelConfig model;
  TrainConfig train;
  AugmentConfig augment;
  LossConfig loss;

  void validate() const;
};

/// Small model used by the test suite and the acceptance runs.
SlapConfig compact_config();

nlohmann::json to_json(const SlapConfig& cfg);
SlapConfig config_from_json(const nlohmann::json& j);
SlapConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const SlapConfig& cfg);

nlohmann::json ipm_model_json(const IpmConfig& cfg);
IpmConfig ipm_model_from_json(const nlohmann::json& j);
nlohmann::json apm_model_json(const ApmConfig& cfg);
ApmConfig apm_model_from_json(const nlohmann::json& j);

/// SHA-256 of the compact JSON dump.
std::string json_hash(const nlohmann::json& j);

}  // namespace slap
