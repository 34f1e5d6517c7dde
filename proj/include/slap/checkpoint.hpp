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


// Checkpoint container, run manifests and run-directory locking.
//
// Checkpoint layout (little-endian):
//   char[4] "SLCK", u32 version
//   u32 length + bytes   kind ("ipm" or "apm")
//   u32 length + bytes   model config JSON
//   char[64]             SHA-256 hex of that JSON
//   u32 tensor count, then per tensor:
//     u32 length + bytes name, u32 rows, u32 cols, f64[rows*cols] row-major

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "slap/apm.hpp"
#include "slap/ipm.hpp"
#include "slap/nn.hpp"

namespace slap {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;
  std::string config_json;
  std::string config_hash;
  std::vector<std::pair<std::string, ad::Matrix>> tensors;
};

Checkpoint make_checkpoint(const std::string& kind, const nlohmann::json& config, const nn::ParameterStore& store);
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
/// Writes through a temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies tensors into `store`; CheckpointMismatch when the config hash,
/// names or shapes differ.
void apply_checkpoint(const Checkpoint& ckpt, const std::string& expected_hash, nn::ParameterStore& store);

/// Model config stored with an interaction-model checkpoint (includes the
/// vocabulary, which fixes the embedding table shape).
nlohmann::json ipm_checkpoint_config(const IpmModel& model);
nlohmann::json apm_checkpoint_config(const ApmModel& model);

Checkpoint ipm_checkpoint(const IpmModel& model);
Checkpoint apm_checkpoint(const ApmModel& model);
std::unique_ptr<IpmModel> ipm_from_checkpoint(const Checkpoint& ckpt);
std::unique_ptr<ApmModel> apm_from_checkpoint(const Checkpoint& ckpt);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string dataset_hash;
  std::uint64_t seed = 0;
  std::string code_version_hash;
  nlohmann::json extra = nlohmann::json::object();
};

void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Exclusive lock on a run directory through an O_EXCL lock file; released
/// on destruction. Throws IoError when the directory is already locked.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace slap
