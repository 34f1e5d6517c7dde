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


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "slap/checkpoint.hpp"
#include "slap/config.hpp"
#include "slap/errors.hpp"

namespace slap {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("slap_cfg_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Config, JsonRoundTripIsLossless) {
  SlapConfig cfg = compact_config();
  cfg.train.tasks = {0, 4};
  cfg.train.lr_schedule = "step";
  cfg.augment.rotation = false;
  cfg.model.apm.input = ApmInput::Absolute;
  cfg.loss.squared_orientation = false;
  const json j = to_json(cfg);
  EXPECT_EQ(to_json(config_from_json(j)), j);
  const fs::path dir = temp_dir("roundtrip");
  save_config(dir / "c.json", cfg);
  EXPECT_EQ(to_json(load_config(dir / "c.json")), j);
  fs::remove_all(dir);
}

TEST(Config, MissingKeysKeepDefaults) {
  const SlapConfig cfg = config_from_json(json{{"train", {{"epochs", 3}}}});
  EXPECT_EQ(cfg.train.epochs, 3);
  EXPECT_EQ(cfg.train.learning_rate, SlapConfig{}.train.learning_rate);
  EXPECT_EQ(to_json(config_from_json(json::object())), to_json(SlapConfig{}));
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  EXPECT_THROW(config_from_json(json{{"trian", json::object()}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"train", {{"epochz", 3}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"model", {{"ipm", {{"encoder", {{"dims", 8}}}}}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"train", {{"epochs", "many"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"train", {{"epochs", 0}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"version", 99}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"train", {{"lr_schedule", "cosine"}}}}), ConfigError);
  const fs::path dir = temp_dir("bad");
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(Config, HashFollowsContent) {
  SlapConfig a = compact_config(), b = compact_config();
  EXPECT_EQ(json_hash(to_json(a)), json_hash(to_json(b)));
  b.train.seed = 1;
  EXPECT_NE(json_hash(to_json(a)), json_hash(to_json(b)));
  EXPECT_EQ(json_hash(to_json(a)).size(), 64u);
}

struct CheckpointFixture : ::testing::Test {
  CheckpointFixture() : vocab(std::vector<std::string>{"open", "the", "drawer"}) {}
  Vocabulary vocab;
  SlapConfig cfg = compact_config();
};

TEST_F(CheckpointFixture, SaveLoadIsBitIdentical) {
  IpmModel model(cfg.model.ipm, vocab, 5);
  const fs::path dir = temp_dir("ckpt");
  const Checkpoint ckpt = ipm_checkpoint(model);
  save_checkpoint(dir / "a.slck", ckpt);
  const Checkpoint back = load_checkpoint(dir / "a.slck");
  save_checkpoint(dir / "b.slck", back);
  std::ifstream fa(dir / "a.slck", std::ios::binary), fb(dir / "b.slck", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(sa, sb);
  const auto restored = ipm_from_checkpoint(back);
  EXPECT_EQ(restored->params().values(), model.params().values());
  EXPECT_EQ(restored->vocab(), vocab);
  fs::remove_all(dir);
}

TEST_F(CheckpointFixture, ApmRoundTripPreservesInputMode) {
  cfg.model.apm.input = ApmInput::FullScene;
  const Vocabulary vocab({"open", "the", "drawer"});
  ApmModel model(cfg.model.apm, vocab, 9);
  std::stringstream buf;
  write_checkpoint(buf, apm_checkpoint(model));
  const auto restored = apm_from_checkpoint(read_checkpoint(buf));
  EXPECT_EQ(restored->config().input, ApmInput::FullScene);
  EXPECT_EQ(restored->vocab(), vocab);
  EXPECT_EQ(restored->params().values(), model.params().values());
  EXPECT_EQ(restored->params().values(), model.params().values());
}

TEST_F(CheckpointFixture, MismatchesAreDetected) {
  IpmModel model(cfg.model.ipm, vocab, 5);
  const Checkpoint ckpt = ipm_checkpoint(model);
  EXPECT_THROW(apm_from_checkpoint(ckpt), CheckpointMismatch);

  IpmConfig other = cfg.model.ipm;
  other.encoder.dim = 2 * other.encoder.dim;
  IpmModel wider(other, vocab, 5);
  EXPECT_THROW(apply_checkpoint(ckpt, ipm_checkpoint(wider).config_hash, wider.params()), CheckpointMismatch);
  EXPECT_THROW(apply_checkpoint(ckpt, ckpt.config_hash, wider.params()), CheckpointMismatch);

  Checkpoint renamed = ckpt;
  renamed.tensors.front().first += "_x";
  EXPECT_THROW(apply_checkpoint(renamed, ckpt.config_hash, model.params()), CheckpointMismatch);
  EXPECT_NO_THROW(apply_checkpoint(ckpt, ckpt.config_hash, model.params()));
}

TEST_F(CheckpointFixture, CorruptFilesAreFormatErrors) {
  IpmModel model(cfg.model.ipm, vocab, 5);
  std::stringstream buf;
  write_checkpoint(buf, ipm_checkpoint(model));
  std::string bytes = buf.str();
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream s1(bad_magic);
  EXPECT_THROW(read_checkpoint(s1), FormatError);
  std::stringstream s2(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(read_checkpoint(s2), FormatError);
  std::string edited = bytes;
  const auto pos = edited.find("\"dim\"");
  ASSERT_NE(pos, std::string::npos);
  edited[pos + 1] = 'D';  // config text no longer matches its stored hash
  std::stringstream s3(edited);
  EXPECT_THROW(read_checkpoint(s3), FormatError);
  EXPECT_THROW(load_checkpoint("/nonexistent/x.slck"), IoError);
}

TEST(RunLock, SecondLockOnTheSameDirectoryFails) {
  const fs::path dir = temp_dir("lock");
  {
    RunLock lock(dir);
    EXPECT_THROW(RunLock again(dir), IoError);
  }
  EXPECT_NO_THROW(RunLock after(dir));
  fs::remove_all(dir);
}

TEST(RunManifest, WritesProvenanceFields) {
  const fs::path dir = temp_dir("manifest");
  write_run_manifest(dir / "m.json", {"train-ipm", "abc", "def", 7, "code", json{{"k", 1}}});
  std::ifstream in(dir / "m.json");
  const json j = json::parse(in);
  EXPECT_EQ(j.at("config_hash"), "abc");
  EXPECT_EQ(j.at("dataset_hash"), "def");
  EXPECT_EQ(j.at("seed"), 7);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace slap
