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


// Demonstration datasets: generation, on-disk layout and loading.
//
// Directory layout:
//   manifest.json   format tag, version, generation options, one record per
//                   episode (file, task, demo index, seed, split, sha256)
//   vocab.txt       command vocabulary, one word per line
//   *.slep          one episode file per demonstration

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "slap/language.hpp"
#include "slap/scenegen.hpp"

namespace slap {

inline constexpr int kDatasetVersion = 1;

struct DatasetOptions {
  /// Empty selects every template.
  std::vector<int> task_ids;
  int demos_per_task = 12;
  int train_per_task = 10;
  int n_distractors = 2;
  std::uint64_t seed = 0;
  SceneOptions scene;
  WorkspaceBounds bounds;
};

struct EpisodeRecord {
  std::string file;
  int task_id = 0;
  std::string task;
  int demo_index = 0;
  std::uint64_t seed = 0;
  std::string split;  // "train" or "val"
  std::string sha256;
};

struct Dataset {
  DatasetOptions options;
  std::vector<EpisodeRecord> records;
  std::vector<Demonstration> episodes;  // parallel to records
  Vocabulary vocab;

  /// Episodes of one split, optionally restricted to some task ids.
  std::vector<const Demonstration*> split(const std::string& name, const std::vector<int>& tasks = {}) const;
  std::string manifest_json() const;
  /// SHA-256 of the manifest text.
  std::string hash() const;
};

/// Per-episode seed derived from the dataset seed, task id and demo index.
std::uint64_t episode_seed(std::uint64_t dataset_seed, int task_id, int demo_index);

/// Generates every episode in memory; deterministic in the options.
Dataset make_dataset(const DatasetOptions& options);
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset build_dataset(const DatasetOptions& options, const std::filesystem::path& dir);
/// Verifies every episode digest against the manifest (DatasetError on mismatch).
Dataset load_dataset(const std::filesystem::path& dir);

std::string serialize_episode(const Demonstration& demo);

}  // namespace slap
