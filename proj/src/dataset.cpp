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


#include "slap/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slap/errors.hpp"
#include "slap/hash.hpp"
#include "slap/random.hpp"

namespace slap {

using nlohmann::json;

namespace {

json options_json(const DatasetOptions& o) {
  return {{"tasks", o.task_ids},
          {"demos_per_task", o.demos_per_task},
          {"train_per_task", o.train_per_task},
          {"n_distractors", o.n_distractors},
          {"seed", o.seed},
          {"scene",
           {{"views", o.scene.views},
            {"density", o.scene.density},
            {"max_yaw", o.scene.max_yaw},
            {"gripper_noise", o.scene.gripper_noise},
            {"gripper_threshold", o.scene.gripper_threshold},
            {"min_points", o.scene.min_points}}},
          {"workspace",
           {{"min", {o.bounds.min.x(), o.bounds.min.y(), o.bounds.min.z()}},
            {"max", {o.bounds.max.x(), o.bounds.max.y(), o.bounds.max.z()}}}}};
}

DatasetOptions options_from_json(const json& j) {
  DatasetOptions o;
  o.task_ids = j.at("tasks").get<std::vector<int>>();
  o.demos_per_task = j.at("demos_per_task");
  o.train_per_task = j.at("train_per_task");
  o.n_distractors = j.at("n_distractors");
  o.seed = j.at("seed");
  const json& s = j.at("scene");
  o.scene.views = s.at("views");
  o.scene.density = s.at("density");
  o.scene.max_yaw = s.at("max_yaw");
  o.scene.gripper_noise = s.at("gripper_noise");
  o.scene.gripper_threshold = s.at("gripper_threshold");
  o.scene.min_points = s.at("min_points");
  const auto lo = j.at("workspace").at("min").get<std::vector<double>>();
  const auto hi = j.at("workspace").at("max").get<std::vector<double>>();
  if (lo.size() != 3 || hi.size() != 3) throw DatasetError("manifest: workspace bounds need 3 values");
  o.bounds.min = Vec3(lo[0], lo[1], lo[2]);
  o.bounds.max = Vec3(hi[0], hi[1], hi[2]);
  return o;
}

std::vector<int> selected_tasks(const DatasetOptions& o) {
  if (!o.task_ids.empty()) return o.task_ids;
  std::vector<int> all;
  for (const auto& t : task_templates()) all.push_back(t.task_id);
  return all;
}

}  // namespace

std::uint64_t episode_seed(std::uint64_t dataset_seed, int task_id, int demo_index) {
  return derive_seed(dataset_seed, {static_cast<std::uint64_t>(task_id), static_cast<std::uint64_t>(demo_index)});
}

std::string serialize_episode(const Demonstration& demo) {
  std::ostringstream out(std::ios::binary);
  write_episode(out, demo);
  return out.str();
}

std::vector<const Demonstration*> Dataset::split(const std::string& name, const std::vector<int>& tasks) const {
  std::vector<const Demonstration*> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split != name) continue;
    if (!tasks.empty() && std::find(tasks.begin(), tasks.end(), records[i].task_id) == tasks.end()) continue;
    out.push_back(&episodes[i]);
  }
  return out;
}

std::string Dataset::manifest_json() const {
  json eps = json::array();
  for (const auto& r : records) {
    eps.push_back({{"file", r.file},
                   {"task_id", r.task_id},
                   {"task", r.task},
                   {"demo_index", r.demo_index},
                   {"seed", r.seed},
                   {"split", r.split},
                   {"sha256", r.sha256}});
  }
  const json j = {{"format", "slap-dataset"},
                  {"version", kDatasetVersion},
                  {"options", options_json(options)},
                  {"vocabulary_size", vocab.words().size()},
                  {"episodes", eps}};
  return j.dump(2) + "\n";
}

std::string Dataset::hash() const { return sha256_hex(manifest_json()); }

Dataset make_dataset(const DatasetOptions& options) {
  const std::vector<int> tasks = selected_tasks(options);
  if (tasks.empty()) throw InvalidArgument("make_dataset: no templates selected");
  if (options.demos_per_task < 1) throw InvalidArgument("make_dataset: demos_per_task must be >= 1");
  if (options.train_per_task < 0 || options.train_per_task > options.demos_per_task) {
    throw InvalidArgument("make_dataset: train_per_task out of range");
  }
  Dataset ds;
  ds.options = options;
  std::vector<std::string> commands;
  for (int task_id : tasks) {
    const TaskTemplate& tmpl = task_template(task_id);
    commands.insert(commands.end(), tmpl.language_variants.begin(), tmpl.language_variants.end());
    for (int k = 0; k < options.demos_per_task; ++k) {
      EpisodeRecord rec;
      rec.task_id = task_id;
      rec.task = tmpl.name;
      rec.demo_index = k;
      rec.seed = episode_seed(options.seed, task_id, k);
      rec.split = k < options.train_per_task ? "train" : "val";
      char name[64];
      std::snprintf(name, sizeof(name), "t%d_%03d.slep", task_id, k);
      rec.file = name;
      Demonstration demo;
      try {
        demo = generate_scene(tmpl, rec.seed, options.n_distractors, options.bounds, options.scene);
      } catch (const PlacementError& e) {
        throw PlacementError(tmpl.name + " demo " + std::to_string(k) + ": " + e.what());
      }
      rec.sha256 = sha256_hex(serialize_episode(demo));
      ds.records.push_back(std::move(rec));
      ds.episodes.push_back(std::move(demo));
    }
  }
  ds.vocab = Vocabulary::from_commands(commands);
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto path = dir / dataset.records[i].file;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write episode " + path.string());
    write_episode(out, dataset.episodes[i]);
    if (!out) throw IoError("failed writing episode " + path.string());
  }
  dataset.vocab.save(dir / "vocab.txt");
  const auto manifest = dir / "manifest.json";
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + manifest.string());
  out << dataset.manifest_json();
  if (!out) throw IoError("failed writing manifest " + manifest.string());
}

Dataset build_dataset(const DatasetOptions& options, const std::filesystem::path& dir) {
  Dataset ds = make_dataset(options);
  save_dataset(ds, dir);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + manifest_path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  Dataset ds;
  try {
    if (j.at("format") != "slap-dataset") throw DatasetError("not a dataset manifest: " + manifest_path.string());
    if (j.at("version") != kDatasetVersion) throw DatasetError("unsupported dataset version");
    ds.options = options_from_json(j.at("options"));
    for (const json& e : j.at("episodes")) {
      EpisodeRecord r;
      r.file = e.at("file");
      r.task_id = e.at("task_id");
      r.task = e.at("task");
      r.demo_index = e.at("demo_index");
      r.seed = e.at("seed");
      r.split = e.at("split");
      r.sha256 = e.at("sha256");
      if (r.split != "train" && r.split != "val") throw DatasetError("unknown split '" + r.split + "'");
      ds.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DatasetError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  ds.vocab = Vocabulary::load(dir / "vocab.txt");
  for (const auto& r : ds.records) {
    const auto path = dir / r.file;
    std::ifstream ep(path, std::ios::binary);
    if (!ep) throw IoError("cannot read episode " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(ep)), std::istreambuf_iterator<char>());
    if (sha256_hex(bytes) != r.sha256) throw DatasetError("episode digest mismatch: " + path.string());
    std::istringstream is(bytes, std::ios::binary);
    Demonstration demo;
    try {
      demo = read_episode(is);
      demo.validate(ds.options.scene.gripper_threshold);
    } catch (const Error& e) {
      throw DatasetError(path.string() + ": " + e.what());
    }
    ds.episodes.push_back(std::move(demo));
  }
  return ds;
}

}  // namespace slap
