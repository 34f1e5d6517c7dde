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


#include "slap/evaluate.hpp"

#include <cstdio>
#include <sstream>

#include "slap/errors.hpp"

namespace slap {

const char* to_string(EvalVariant v) {
  switch (v) {
    case EvalVariant::Full: return "full";
    case EvalVariant::OracleIpm: return "oracle_ipm";
    case EvalVariant::NoCrop: return "no_crop";
    case EvalVariant::PointnetOnly: return "pointnet_only";
    case EvalVariant::IpmOnly: return "ipm_only";
  }
  return "?";
}

EvalVariant eval_variant_from_string(const std::string& s) {
  for (EvalVariant v : {EvalVariant::Full, EvalVariant::OracleIpm, EvalVariant::NoCrop, EvalVariant::PointnetOnly,
                        EvalVariant::IpmOnly}) {
    if (s == to_string(v)) return v;
  }
  throw InvalidArgument("unknown evaluation variant: " + s);
}

ApmInput required_apm_input(EvalVariant v) {
  switch (v) {
    case EvalVariant::NoCrop: return ApmInput::FullScene;
    case EvalVariant::PointnetOnly: return ApmInput::Absolute;
    default: return ApmInput::Cropped;
  }
}

InteractionFn interaction_fn(const IpmModel& model) {
  return [&model](const Demonstration& d) { return model.predict(d).point; };
}

ActionModelFns action_fns(const ApmModel& model) {
  return {[&model](const PointCloud& scene, const Vec3& origin) { return model.select_input(scene, origin); },
          [&model](const Demonstration& d, const Vec3& p) { return model.origin_for(d, p); },
          [&model](const PointCloud& input, const Vec3& origin, const Demonstration& d) {
            return model.predict(input, origin, d.pre_action_states(), d.command);
          }};
}

namespace {

struct Accumulator {
  int episodes = 0, failures = 0, oriented = 0;
  double error = 0, orientation = 0, hits = 0;

  void add(double e, bool failed, double ori, bool has_ori, bool hit) {
    ++episodes;
    error += e;
    if (failed) ++failures;
    if (has_ori) {
      orientation += ori;
      ++oriented;
    }
    hits += hit ? 1.0 : 0.0;
  }
  EvalRow row(int task_id, std::string task) const {
    EvalRow r{task_id, std::move(task), episodes, failures, 0, 0, 0};
    if (episodes > 0) {
      r.mean_error = error / episodes;
      r.accuracy = hits / episodes;
    }
    if (oriented > 0) r.mean_orientation = orientation / oriented;
    return r;
  }
};

struct ReportBuilder {
  std::map<int, Accumulator> per_task;
  Accumulator all;

  void add(const Demonstration& d, double e, bool failed, double ori, bool has_ori, bool hit) {
    per_task[d.task_id].add(e, failed, ori, has_ori, hit);
    all.add(e, failed, ori, has_ori, hit);
  }
  EvalReport build(const std::string& variant) const {
    EvalReport r;
    r.variant = variant;
    for (const auto& [id, acc] : per_task) r.rows.push_back(acc.row(id, task_template(id).name));
    r.overall = all.row(-1, "average");
    return r;
  }
};

}  // namespace

EvalReport evaluate_distance_error(EpisodeList episodes, EvalVariant variant, const InteractionFn& interaction,
                                   const ActionModelFns& actions) {
  const bool needs_ipm = variant == EvalVariant::Full || variant == EvalVariant::NoCrop || variant == EvalVariant::IpmOnly;
  if (needs_ipm && !interaction) throw InvalidArgument(std::string(to_string(variant)) + " needs an interaction model");
  if (variant != EvalVariant::IpmOnly && !actions.predict) {
    throw InvalidArgument(std::string(to_string(variant)) + " needs an action model");
  }
  ReportBuilder builder;
  for (const Demonstration* d : episodes) {
    Vec3 p_i = d->interaction_point;
    if (needs_ipm) p_i = interaction(*d);
    const bool hit = d->part_box.contains(p_i);
    if (variant == EvalVariant::IpmOnly) {
      builder.add(*d, (p_i - d->interaction_point).norm(), false, 0, false, hit);
      continue;
    }
    const Vec3 origin = actions.origin_for(*d, p_i);
    PointCloud input;
    try {
      input = actions.select_input(d->cloud, origin);
    } catch (const EmptyCrop&) {
      builder.add(*d, kFailureError, true, 0, false, hit);
      continue;
    }
    const ActionTriplet pred = actions.predict(input, origin, *d);
    double error = 0, ori = 0;
    for (int i = 0; i < 3; ++i) {
      error += (origin + pred.actions[i].delta_p - d->keyframes[i].position).norm() / 3.0;
      ori += quat_angle(pred.actions[i].q, d->keyframes[i].q) / 3.0;
    }
    builder.add(*d, error, false, ori, true, hit);
  }
  return builder.build(to_string(variant));
}

EvalReport evaluate_distance_error(EpisodeList episodes, EvalVariant variant, const IpmModel* ipm,
                                   const ApmModel* apm) {
  InteractionFn interaction;
  ActionModelFns actions;
  if (ipm) interaction = interaction_fn(*ipm);
  if (variant != EvalVariant::IpmOnly) {
    if (!apm) throw InvalidArgument(std::string(to_string(variant)) + " needs an action model");
    if (apm->config().input != required_apm_input(variant)) {
      throw ConfigError(std::string("variant ") + to_string(variant) + " needs an action model with input '" +
                        to_string(required_apm_input(variant)) + "'");
    }
    actions = action_fns(*apm);
  }
  return evaluate_distance_error(episodes, variant, interaction, actions);
}

EvalReport evaluate_interaction_accuracy(EpisodeList episodes, const InteractionFn& interaction) {
  if (!interaction) throw InvalidArgument("interaction accuracy needs an interaction model");
  ReportBuilder builder;
  for (const Demonstration* d : episodes) {
    const Vec3 p = interaction(*d);
    builder.add(*d, (p - d->interaction_point).norm(), false, 0, false, d->part_box.contains(p));
  }
  return builder.build("ipm_accuracy");
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "variant,task_id,task,episodes,failures,mean_error_m,mean_orientation_rad,interaction_accuracy\n";
  auto line = [&](const EvalRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%d,%s,%d,%d,%.9g,%.9g,%.9g\n", variant.c_str(), r.task_id, r.task.c_str(),
                  r.episodes, r.failures, r.mean_error, r.mean_orientation, r.accuracy);
    out << buf;
  };
  for (const auto& r : rows) line(r);
  line(overall);
  return out.str();
}

}  // namespace slap
