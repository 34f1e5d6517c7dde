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


#include "slap/config.hpp"

#include <fstream>
#include <set>

#include "slap/errors.hpp"
#include "slap/hash.hpp"

namespace slap {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size != 1) throw ConfigError("train.batch_size must be 1");
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be positive");
  if (lr_schedule != "none" && lr_schedule != "step") throw ConfigError("train.lr_schedule must be none or step");
  if (lr_step_epochs < 1) throw ConfigError("train.lr_step_epochs must be >= 1");
  if (!(lr_decay > 0)) throw ConfigError("train.lr_decay must be positive");
}

void LossConfig::validate() const {
  if (!(locality_weight >= 0)) throw ConfigError("loss.locality_weight must be >= 0");
  apm.validate();
}

void SlapConfig::validate() const {
  model.ipm.validate();
  model.apm.validate();
  train.validate();
  augment.validate();
  loss.validate();
}

SlapConfig compact_config() {
  SlapConfig cfg;
  EncoderConfig& e = cfg.model.ipm.encoder;
  e.dim = 64;
  e.fine.mlp_widths = {32, 32, 64};
  e.coarse.mlp_widths = {64, 64};
  cfg.model.ipm.backbone = {32, 64, 2, 4, 4};
  cfg.model.ipm.proprio_hidden = {32};
  ApmConfig& a = cfg.model.apm;
  a.local.mlp_widths = {32, 32};
  a.wide.mlp_widths = {64, 64};
  a.global_mlp = {64, 128};
  a.head_hidden = {64, 32};
  a.gripper_hidden = {16};
  cfg.train.learning_rate = 1e-3;
  return cfg;
}

namespace {

// Reads keys of one JSON object into a struct, rejecting keys it does not know.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + path_ + "." + key);
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("bad value for " + path_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string path(const char* key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json sa_json(const SetAbstractionConfig& c) {
  return {{"grid_resolution", c.grid_resolution},
          {"ball_radius", c.ball_radius},
          {"max_neighbors", c.max_neighbors},
          {"mlp_widths", c.mlp_widths}};
}

void read_sa(const json* j, const std::string& path, SetAbstractionConfig& c) {
  if (!j) return;
  Reader r(*j, path);
  r.get("grid_resolution", c.grid_resolution);
  r.get("ball_radius", c.ball_radius);
  r.get("max_neighbors", c.max_neighbors);
  r.get("mlp_widths", c.mlp_widths);
}

json augment_json(const AugmentConfig& a) {
  return {{"enabled", a.enabled},
          {"rotation", a.rotation},
          {"rotation_max_deg", a.rotation_max_deg},
          {"crop_probability", a.crop_probability},
          {"crop_radius_min", a.crop_radius_min},
          {"crop_radius_max", a.crop_radius_max},
          {"crop_center_std", a.crop_center_std},
          {"crop_retries", a.crop_retries},
          {"dropout", a.dropout},
          {"dropout_mean", a.dropout_mean},
          {"ellipse_axis_min", a.ellipse_axis_min},
          {"ellipse_axis_max", a.ellipse_axis_max},
          {"dropout_min_points", a.dropout_min_points},
          {"noise", a.noise},
          {"noise_std_min", a.noise_std_min},
          {"noise_std_max", a.noise_std_max},
          {"apm_center_std", a.apm_center_std},
          {"apm_jitter", a.apm_jitter}};
}

void read_augment(const json* j, AugmentConfig& a) {
  if (!j) return;
  Reader r(*j, "augment");
  r.get("enabled", a.enabled);
  r.get("rotation", a.rotation);
  r.get("rotation_max_deg", a.rotation_max_deg);
  r.get("crop_probability", a.crop_probability);
  r.get("crop_radius_min", a.crop_radius_min);
  r.get("crop_radius_max", a.crop_radius_max);
  r.get("crop_center_std", a.crop_center_std);
  r.get("crop_retries", a.crop_retries);
  r.get("dropout", a.dropout);
  r.get("dropout_mean", a.dropout_mean);
  r.get("ellipse_axis_min", a.ellipse_axis_min);
  r.get("ellipse_axis_max", a.ellipse_axis_max);
  r.get("dropout_min_points", a.dropout_min_points);
  r.get("noise", a.noise);
  r.get("noise_std_min", a.noise_std_min);
  r.get("noise_std_max", a.noise_std_max);
  r.get("apm_center_std", a.apm_center_std);
  r.get("apm_jitter", a.apm_jitter);
}

}  // namespace

json ipm_model_json(const IpmConfig& c) {
  const EncoderConfig& e = c.encoder;
  const BackboneConfig& b = c.backbone;
  return {{"encoder",
           {{"fine", sa_json(e.fine)},
            {"coarse", sa_json(e.coarse)},
            {"dim", e.dim},
            {"position_bands", e.position_bands},
            {"max_period", e.max_period},
            {"min_period", e.min_period},
            {"neighbor_seed", e.neighbor_seed}}},
          {"backbone",
           {{"latent_count", b.latent_count},
            {"latent_dim", b.latent_dim},
            {"self_attention_blocks", b.self_attention_blocks},
            {"heads", b.heads},
            {"ff_multiplier", b.ff_multiplier}}},
          {"proprio_hidden", c.proprio_hidden}};
}

IpmConfig ipm_model_from_json(const json& j) {
  IpmConfig c;
  Reader r(j, "model.ipm");
  if (const json* e = r.child("encoder")) {
    Reader er(*e, "model.ipm.encoder");
    read_sa(er.child("fine"), "model.ipm.encoder.fine", c.encoder.fine);
    read_sa(er.child("coarse"), "model.ipm.encoder.coarse", c.encoder.coarse);
    er.get("dim", c.encoder.dim);
    er.get("position_bands", c.encoder.position_bands);
    er.get("max_period", c.encoder.max_period);
    er.get("min_period", c.encoder.min_period);
    er.get("neighbor_seed", c.encoder.neighbor_seed);
  }
  if (const json* b = r.child("backbone")) {
    Reader br(*b, "model.ipm.backbone");
    br.get("latent_count", c.backbone.latent_count);
    br.get("latent_dim", c.backbone.latent_dim);
    br.get("self_attention_blocks", c.backbone.self_attention_blocks);
    br.get("heads", c.backbone.heads);
    br.get("ff_multiplier", c.backbone.ff_multiplier);
  }
  r.get("proprio_hidden", c.proprio_hidden);
  return c;
}

json apm_model_json(const ApmConfig& c) {
  return {{"input", to_string(c.input)},
          {"crop_radius", c.crop_radius},
          {"local", sa_json(c.local)},
          {"wide", sa_json(c.wide)},
          {"global_mlp", c.global_mlp},
          {"head_hidden", c.head_hidden},
          {"gripper_hidden", c.gripper_hidden},
          {"position_scale", c.position_scale},
          {"separate_trunks", c.separate_trunks},
          {"language_dim", c.language_dim},
          {"neighbor_seed", c.neighbor_seed}};
}

ApmConfig apm_model_from_json(const json& j) {
  ApmConfig c;
  Reader r(j, "model.apm");
  std::string input = to_string(c.input);
  r.get("input", input);
  c.input = apm_input_from_string(input);
  r.get("crop_radius", c.crop_radius);
  read_sa(r.child("local"), "model.apm.local", c.local);
  read_sa(r.child("wide"), "model.apm.wide", c.wide);
  r.get("global_mlp", c.global_mlp);
  r.get("head_hidden", c.head_hidden);
  r.get("gripper_hidden", c.gripper_hidden);
  r.get("position_scale", c.position_scale);
  r.get("separate_trunks", c.separate_trunks);
  r.get("language_dim", c.language_dim);
  r.get("neighbor_seed", c.neighbor_seed);
  return c;
}

json to_json(const SlapConfig& cfg) {
  const TrainConfig& t = cfg.train;
  const LossConfig& l = cfg.loss;
  return {{"version", kConfigVersion},
          {"model",
           {{"ipm", ipm_model_json(cfg.model.ipm)},
            {"apm", apm_model_json(cfg.model.apm)},
            {"init_seed", cfg.model.init_seed}}},
          {"train",
           {{"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"learning_rate", t.learning_rate},
            {"seed", t.seed},
            {"validation_reset", t.validation_reset},
            {"lr_schedule", t.lr_schedule},
            {"lr_step_epochs", t.lr_step_epochs},
            {"lr_decay", t.lr_decay},
            {"tasks", t.tasks}}},
          {"augment", augment_json(cfg.augment)},
          {"loss",
           {{"locality_weight", l.locality_weight},
            {"lambda_position", l.apm.position},
            {"lambda_orientation", l.apm.orientation},
            {"lambda_gripper", l.apm.gripper},
            {"squared_orientation", l.squared_orientation}}}};
}

SlapConfig config_from_json(const json& j) {
  SlapConfig cfg;
  {
    Reader r(j, "config");
    int version = kConfigVersion;
    r.get("version", version);
    if (version != kConfigVersion) throw ConfigError("unsupported config version " + std::to_string(version));
    if (const json* m = r.child("model")) {
      Reader mr(*m, "model");
      if (const json* ipm = mr.child("ipm")) cfg.model.ipm = ipm_model_from_json(*ipm);
      if (const json* apm = mr.child("apm")) cfg.model.apm = apm_model_from_json(*apm);
      mr.get("init_seed", cfg.model.init_seed);
    }
    if (const json* t = r.child("train")) {
      Reader tr(*t, "train");
      tr.get("epochs", cfg.train.epochs);
      tr.get("batch_size", cfg.train.batch_size);
      tr.get("learning_rate", cfg.train.learning_rate);
      tr.get("seed", cfg.train.seed);
      tr.get("validation_reset", cfg.train.validation_reset);
      tr.get("lr_schedule", cfg.train.lr_schedule);
      tr.get("lr_step_epochs", cfg.train.lr_step_epochs);
      tr.get("lr_decay", cfg.train.lr_decay);
      tr.get("tasks", cfg.train.tasks);
    }
    read_augment(r.child("augment"), cfg.augment);
    if (const json* l = r.child("loss")) {
      Reader lr(*l, "loss");
      lr.get("locality_weight", cfg.loss.locality_weight);
      lr.get("lambda_position", cfg.loss.apm.position);
      lr.get("lambda_orientation", cfg.loss.apm.orientation);
      lr.get("lambda_gripper", cfg.loss.apm.gripper);
      lr.get("squared_orientation", cfg.loss.squared_orientation);
    }
  }
  cfg.validate();
  return cfg;
}

SlapConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const SlapConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << to_json(cfg).dump(2) << '\n';
  if (!out) throw IoError("failed writing config " + path.string());
}

std::string json_hash(const json& j) { return sha256_hex(j.dump()); }

}  // namespace slap
