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


// Command-line front end: data generation, training, evaluation, ablations,
// visualization and gradient checks.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slap/checkpoint.hpp"
#include "slap/cloud_io.hpp"
#include "slap/config.hpp"
#include "slap/dataset.hpp"
#include "slap/errors.hpp"
#include "slap/evaluate.hpp"
#include "slap/grad_check.hpp"
#include "slap/hash.hpp"
#include "slap/train.hpp"

namespace fs = std::filesystem;
using namespace slap;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_tasks(const std::string& spec) {
  std::vector<int> ids;
  if (spec.empty() || spec == "all") return ids;
  for (const auto& name : split_list(spec)) ids.push_back(find_template(name).task_id);
  return ids;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) s += ' ';
    s += argv[i];
  }
  return s;
}

// Config file plus flag overrides shared by the training commands.
struct ConfigFlags {
  std::string path;
  bool compact = false;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> init_seed;
  bool no_reset = false;
  bool no_augment = false;
  std::optional<double> locality_weight;
  std::optional<std::string> lr_schedule;
  std::string tasks;

  void add_to(CLI::App* app) {
    app->add_option("--config", path, "JSON config file");
    app->add_flag("--compact", compact, "start from the compact model config");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--seed", seed, "training seed");
    app->add_option("--init-seed", init_seed, "parameter initialization seed");
    app->add_flag("--no-validation-reset", no_reset, "keep training from the current parameters");
    app->add_flag("--no-augment", no_augment, "disable data augmentation");
    app->add_option("--locality-weight", locality_weight, "interaction locality loss weight");
    app->add_option("--lr-schedule", lr_schedule, "none or step");
    app->add_option("--tasks", tasks, "comma-separated task names or ids (default all)");
  }

  SlapConfig resolve() const {
    SlapConfig cfg = !path.empty() ? load_config(path) : compact ? compact_config() : SlapConfig{};
    if (epochs) cfg.train.epochs = *epochs;
    if (lr) cfg.train.learning_rate = *lr;
    if (seed) cfg.train.seed = *seed;
    if (init_seed) cfg.model.init_seed = *init_seed;
    if (no_reset) cfg.train.validation_reset = false;
    if (no_augment) cfg.augment.enabled = false;
    if (locality_weight) cfg.loss.locality_weight = *locality_weight;
    if (lr_schedule) cfg.train.lr_schedule = *lr_schedule;
    if (!tasks.empty()) cfg.train.tasks = parse_tasks(tasks);
    cfg.validate();
    return cfg;
  }
};

RunManifest base_manifest(const std::string& cmd, const std::string& config_hash, const Dataset& data,
                          std::uint64_t seed) {
  RunManifest m;
  m.command = cmd;
  m.config_hash = config_hash;
  m.dataset_hash = data.hash();
  m.seed = seed;
  m.code_version_hash = code_version_hash();
  return m;
}

TrainHooks print_hooks() {
  TrainHooks hooks;
  hooks.log = [](const std::string& line) { std::cout << line << std::endl; };
  return hooks;
}

int cmd_gen_data(const std::string& templates, int demos, int train_per_task, int distractors, std::uint64_t seed,
                 const std::string& out) {
  DatasetOptions opts;
  opts.task_ids = parse_tasks(templates);
  opts.demos_per_task = demos;
  opts.train_per_task = train_per_task;
  opts.n_distractors = distractors;
  opts.seed = seed;
  const Dataset data = build_dataset(opts, out);
  std::cout << "wrote " << data.records.size() << " episodes to " << out << " (dataset " << data.hash() << ")\n";
  return 0;
}

template <typename Train>
int run_training(const std::string& kind, const std::string& data_dir, const std::string& out_dir,
                 const SlapConfig& cfg, const std::string& cmd, Train&& train) {
  const Dataset data = load_dataset(data_dir);
  const auto train_eps = data.split("train", cfg.train.tasks);
  const auto val_eps = data.split("val", cfg.train.tasks);
  fs::create_directories(out_dir);
  RunLock lock(out_dir);
  save_config(fs::path(out_dir) / "config.json", cfg);
  const std::string config_hash = json_hash(to_json(cfg));
  RunManifest manifest = base_manifest(cmd, config_hash, data, cfg.train.seed);
  manifest.extra["kind"] = kind;
  manifest.extra["train_episodes"] = train_eps.size();
  manifest.extra["val_episodes"] = val_eps.size();
  train(data, train_eps, val_eps, manifest);
  write_run_manifest(fs::path(out_dir) / "run_manifest.json", manifest);
  return 0;
}

int cmd_train_ipm(const std::string& data_dir, const std::string& out_dir, const SlapConfig& cfg,
                  const std::string& cmd) {
  return run_training("ipm", data_dir, out_dir, cfg, cmd,
                      [&](const Dataset& data, const auto& train_eps, const auto& val_eps, RunManifest& manifest) {
                        IpmModel model(cfg.model.ipm, data.vocab, cfg.model.init_seed);
                        const auto result = train_ipm(model, train_eps, val_eps, cfg, print_hooks());
                        const Checkpoint ckpt = ipm_checkpoint(model);
                        save_checkpoint(fs::path(out_dir) / "ipm.slck", ckpt);
                        write_text(fs::path(out_dir) / "ipm_epochs.csv", ipm_csv(result.rows));
                        manifest.extra["checkpoint_config_hash"] = ckpt.config_hash;
                        manifest.extra["best_epoch"] = result.best_epoch;
                        manifest.extra["best_val_loss"] = result.best_val_loss;
                      });
}

int cmd_train_apm(const std::string& data_dir, const std::string& out_dir, SlapConfig cfg, const std::string& input,
                  const std::string& cmd) {
  if (!input.empty()) cfg.model.apm.input = apm_input_from_string(input);
  return run_training("apm", data_dir, out_dir, cfg, cmd,
                      [&](const Dataset& data, const auto& train_eps, const auto& val_eps, RunManifest& manifest) {
                        ApmModel model(cfg.model.apm, data.vocab, cfg.model.init_seed);
                        const auto result = train_apm(model, train_eps, val_eps, cfg, print_hooks());
                        const Checkpoint ckpt = apm_checkpoint(model);
                        save_checkpoint(fs::path(out_dir) / "apm.slck", ckpt);
                        write_text(fs::path(out_dir) / "apm_epochs.csv", apm_csv(result.rows));
                        manifest.extra["checkpoint_config_hash"] = ckpt.config_hash;
                        manifest.extra["input"] = to_string(cfg.model.apm.input);
                        manifest.extra["best_epoch"] = result.best_epoch;
                        manifest.extra["best_val_loss"] = result.best_val_loss;
                      });
}

std::unique_ptr<IpmModel> load_ipm(const std::string& path) {
  return path.empty() ? nullptr : ipm_from_checkpoint(load_checkpoint(path));
}

std::unique_ptr<ApmModel> load_apm(const std::string& path) {
  return path.empty() ? nullptr : apm_from_checkpoint(load_checkpoint(path));
}

void add_provenance(EvalReport& report, const Dataset& data, const std::string& split, const std::string& ipm_path,
                    const std::string& apm_path) {
  report.provenance["dataset_hash"] = data.hash();
  report.provenance["split"] = split;
  if (!ipm_path.empty()) report.provenance["ipm_checkpoint_sha256"] = sha256_file(ipm_path);
  if (!apm_path.empty()) report.provenance["apm_checkpoint_sha256"] = sha256_file(apm_path);
  report.provenance["code_version_hash"] = code_version_hash();
}

void emit_report(const EvalReport& report, const std::string& out) {
  const std::string csv = report.to_csv();
  std::cout << csv;
  if (out.empty()) return;
  write_text(out, csv);
  nlohmann::json prov(report.provenance);
  write_text(fs::path(out).string() + ".manifest.json", prov.dump(2) + "\n");
}

int cmd_eval(const std::string& data_dir, const std::string& split, const std::string& tasks,
             const std::string& variant_name, const std::string& ipm_path, const std::string& apm_path,
             const std::string& out) {
  const Dataset data = load_dataset(data_dir);
  const auto eps = data.split(split, parse_tasks(tasks));
  const EvalVariant variant = eval_variant_from_string(variant_name);
  const auto ipm = load_ipm(ipm_path);
  const auto apm = load_apm(apm_path);
  EvalReport report = evaluate_distance_error(eps, variant, ipm.get(), apm.get());
  add_provenance(report, data, split, ipm_path, apm_path);
  report.provenance["variant"] = variant_name;
  emit_report(report, out);
  return 0;
}

struct AblateArgs {
  std::string suite, data, split = "val", tasks, out;
  std::string ipm, apm_cropped, apm_full, apm_absolute;
  std::vector<std::string> ipm_list;
};

int cmd_ablate(const AblateArgs& a) {
  const Dataset data = load_dataset(a.data);
  const auto eps = data.split(a.split, parse_tasks(a.tasks));
  std::string csv;
  nlohmann::json prov = nlohmann::json::object();
  prov["dataset_hash"] = data.hash();
  prov["split"] = a.split;
  prov["code_version_hash"] = code_version_hash();
  auto append = [&](const EvalReport& r) {
    const std::string part = r.to_csv();
    csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
  };
  if (a.suite == "dist-error") {
    const auto ipm = load_ipm(a.ipm);
    const auto cropped = load_apm(a.apm_cropped);
    const auto full = load_apm(a.apm_full);
    const auto absolute = load_apm(a.apm_absolute);
    if (!ipm || !cropped) throw InvalidArgument("dist-error needs --ipm and --apm-cropped");
    append(evaluate_distance_error(eps, EvalVariant::IpmOnly, ipm.get(), nullptr));
    append(evaluate_distance_error(eps, EvalVariant::Full, ipm.get(), cropped.get()));
    append(evaluate_distance_error(eps, EvalVariant::OracleIpm, nullptr, cropped.get()));
    if (full) append(evaluate_distance_error(eps, EvalVariant::NoCrop, ipm.get(), full.get()));
    if (absolute) append(evaluate_distance_error(eps, EvalVariant::PointnetOnly, nullptr, absolute.get()));
    for (const auto& [key, path] : {std::pair{"ipm", a.ipm}, {"apm_cropped", a.apm_cropped},
                                    {"apm_full_scene", a.apm_full}, {"apm_absolute", a.apm_absolute}}) {
      if (!path.empty()) prov[std::string(key) + "_sha256"] = sha256_file(path);
    }
  } else if (a.suite == "ipm-accuracy") {
    if (a.ipm_list.empty()) throw InvalidArgument("ipm-accuracy needs at least one --ipm");
    for (const auto& path : a.ipm_list) {
      const auto ipm = load_ipm(path);
      EvalReport r = evaluate_interaction_accuracy(eps, interaction_fn(*ipm));
      r.variant = fs::path(path).parent_path().filename().string();
      if (r.variant.empty()) r.variant = path;
      append(r);
      prov[r.variant + "_sha256"] = sha256_file(path);
    }
  } else {
    throw InvalidArgument("unknown suite '" + a.suite + "' (expected dist-error or ipm-accuracy)");
  }
  std::cout << csv;
  if (!a.out.empty()) {
    write_text(a.out, csv);
    write_text(a.out + ".manifest.json", prov.dump(2) + "\n");
  }
  return 0;
}

int cmd_visualize(const std::string& data_dir, const std::string& episode, const std::string& ipm_path,
                  const std::string& out) {
  const Dataset data = load_dataset(data_dir);
  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    if (data.records[i].file == episode || data.records[i].file == episode + ".slep") pick = i;
  }
  if (!pick) {
    try {
      const std::size_t i = std::stoul(episode);
      if (i < data.records.size()) pick = i;
    } catch (const std::exception&) {
    }
  }
  if (!pick) throw InvalidArgument("no episode '" + episode + "' in " + data_dir);
  const Demonstration& demo = data.episodes[*pick];
  if (ipm_path.empty()) {
    save_ply(out, demo.cloud);
  } else {
    const auto ipm = load_ipm(ipm_path);
    const InteractionPrediction pred = ipm->predict(demo);
    PointCloud tokens;
    tokens = grid_downsample(demo.cloud, kTokenResolution);
    export_attention(pred, tokens, out);
    std::cout << "predicted interaction point " << pred.point.transpose() << ", label "
              << demo.interaction_point.transpose() << "\n";
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_grad_check(const std::string& module, int size, double tol) {
  const std::vector<std::string> names = module == "all" ? grad_check_modules() : std::vector<std::string>{module};
  bool ok = true;
  for (const auto& name : names) {
    const GradCheckReport r = run_grad_check(name, size, tol);
    std::printf("%-18s %s max_rel=%.3e entries=%zu worst=%s[%ld]\n", name.c_str(), r.passed ? "PASS" : "FAIL",
                r.max_relative_error, r.entries_checked, r.worst_parameter.c_str(),
                static_cast<long>(r.worst_index));
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interaction-point and relative-action learning from keyframe demonstrations"};
  app.require_subcommand(1);
  const std::string cmd = command_line(argc, argv);

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic demonstration dataset");
  std::string templates = "all", gen_out;
  int demos = 12, train_per_task = 10, distractors = 2;
  std::uint64_t gen_seed = 0;
  gen->add_option("--templates", templates, "all or comma-separated task names/ids");
  gen->add_option("--demos", demos, "demonstrations per task");
  gen->add_option("--train-per-task", train_per_task, "training demos per task (rest are validation)");
  gen->add_option("--distractors", distractors, "distractor objects per scene");
  gen->add_option("--seed", gen_seed, "dataset seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  std::string data_dir, run_out, apm_input;
  ConfigFlags ipm_flags, apm_flags;
  auto* tipm = app.add_subcommand("train-ipm", "train the interaction prediction model");
  tipm->add_option("--data", data_dir, "dataset directory")->required();
  tipm->add_option("--out", run_out, "run directory")->required();
  ipm_flags.add_to(tipm);
  auto* tapm = app.add_subcommand("train-apm", "train the relative action model");
  tapm->add_option("--data", data_dir, "dataset directory")->required();
  tapm->add_option("--out", run_out, "run directory")->required();
  tapm->add_option("--input", apm_input, "cropped, full_scene or absolute");
  apm_flags.add_to(tapm);

  std::string split = "val", tasks, variant = "full", ipm_path, apm_path, report_out;
  auto* ev = app.add_subcommand("eval", "distance-error evaluation of one pipeline variant");
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--variant", variant, "full, oracle_ipm, no_crop, pointnet_only or ipm_only");
  ev->add_option("--ipm", ipm_path, "interaction model checkpoint");
  ev->add_option("--apm", apm_path, "action model checkpoint");
  ev->add_option("--split", split, "train or val");
  ev->add_option("--tasks", tasks, "comma-separated task names or ids");
  ev->add_option("--out", report_out, "CSV report path");

  AblateArgs ab;
  auto* abl = app.add_subcommand("ablate", "run an ablation suite");
  abl->add_option("--suite", ab.suite, "dist-error or ipm-accuracy")->required();
  abl->add_option("--data", ab.data, "dataset directory")->required();
  abl->add_option("--split", ab.split, "train or val");
  abl->add_option("--tasks", ab.tasks, "comma-separated task names or ids");
  abl->add_option("--ipm", ab.ipm_list, "interaction model checkpoint(s)");
  abl->add_option("--apm-cropped", ab.apm_cropped, "action model trained on cropped input");
  abl->add_option("--apm-full", ab.apm_full, "action model trained on the full scene");
  abl->add_option("--apm-absolute", ab.apm_absolute, "action model trained with absolute targets");
  abl->add_option("--out", ab.out, "CSV report path");

  std::string episode, vis_out;
  auto* vis = app.add_subcommand("visualize", "export an episode (and optional prediction) as PLY");
  vis->add_option("--data", data_dir, "dataset directory")->required();
  vis->add_option("--episode", episode, "episode file name or index")->required();
  vis->add_option("--ipm", ipm_path, "interaction model checkpoint for the attention export");
  vis->add_option("--out", vis_out, "PLY path")->required();

  std::string module = "all";
  int gc_size = 8;
  double gc_tol = 1e-3;
  auto* gc = app.add_subcommand("grad-check", "finite-difference gradient checks");
  gc->add_option("--module", module, "registered module name or all");
  gc->add_option("--size", gc_size, "instance size (points or tokens)");
  gc->add_option("--tolerance", gc_tol, "relative error tolerance");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen_data(templates, demos, train_per_task, distractors, gen_seed, gen_out);
    if (*tipm) return cmd_train_ipm(data_dir, run_out, ipm_flags.resolve(), cmd);
    if (*tapm) return cmd_train_apm(data_dir, run_out, apm_flags.resolve(), apm_input, cmd);
    if (*ev) return cmd_eval(data_dir, split, tasks, variant, ipm_path, apm_path, report_out);
    if (*abl) {
      if (ab.ipm_list.size() == 1) ab.ipm = ab.ipm_list.front();
      if (ab.suite == "dist-error" && ab.ipm_list.size() > 1) throw InvalidArgument("dist-error takes one --ipm");
      return cmd_ablate(ab);
    }
    if (*vis) return cmd_visualize(data_dir, episode, ipm_path, vis_out);
    if (*gc) return cmd_grad_check(module, gc_size, gc_tol);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
