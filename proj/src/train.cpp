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


#include "slap/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "slap/augment.hpp"
#include "slap/errors.hpp"
#include "slap/random.hpp"

namespace slap {

using ad::Tape;
using ad::Var;

namespace {

std::string sample_id(const Demonstration& d) {
  return "task " + std::to_string(d.task_id) + " seed " + std::to_string(d.seed);
}

void check_finite(double v, const Demonstration& d) {
  if (!std::isfinite(v)) throw NonFiniteLoss("non-finite loss on sample " + sample_id(d));
}

double learning_rate(const TrainConfig& t, int epoch) {
  if (t.lr_schedule == "step") return t.learning_rate * std::pow(t.lr_decay, epoch / t.lr_step_epochs);
  return t.learning_rate;
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {0x5ff1e, static_cast<std::uint64_t>(epoch)}));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void require_splits(EpisodeList train, EpisodeList val) {
  if (train.empty()) throw DatasetError("training split is empty");
  if (val.empty()) throw DatasetError("validation split is empty");
}

// Best-so-far snapshot of parameters and optimizer moments.
struct Snapshot {
  std::vector<ad::Matrix> values;
  nn::Adam::State adam;
};

template <typename Row, typename Model, typename StepFn, typename ValidateFn>
TrainResult<Row> run_training(Model& model, EpisodeList train, const SlapConfig& cfg, const TrainHooks& hooks,
                              const std::function<bool(const Row&)>& epoch_end, StepFn step, ValidateFn validate) {
  cfg.train.validate();
  nn::Adam adam(model.params(), {cfg.train.learning_rate, 0.9, 0.999, 1e-8});
  TrainResult<Row> result;
  Snapshot best;
  bool have_best = false;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    adam.set_learning_rate(learning_rate(cfg.train, epoch));
    Row row;
    row.epoch = epoch + 1;
    const auto order = shuffled(train.size(), cfg.train.seed, epoch);
    for (std::size_t k = 0; k < order.size(); ++k) {
      model.params().zero_grad();
      step(*train[order[k]], derive_seed(cfg.train.seed, {static_cast<std::uint64_t>(epoch), order[k]}), row);
      adam.step(model.params());
    }
    validate(row, static_cast<double>(train.size()));
    if (!have_best || row.val_loss < result.best_val_loss) {
      have_best = true;
      result.best_val_loss = row.val_loss;
      result.best_epoch = row.epoch;
      best = {model.params().values(), adam.state()};
    } else if (cfg.train.validation_reset) {
      model.params().set_values(best.values);
      adam.set_state(best.adam);
      row.reset = true;
    }
    result.rows.push_back(row);
    if (hooks.log) {
      char line[160];
      std::snprintf(line, sizeof(line), "epoch %d val_loss %.6g%s", row.epoch, row.val_loss,
                    row.reset ? " (reset to best)" : "");
      hooks.log(line);
    }
    if (epoch_end && epoch_end(row)) break;
  }
  // Without the reset protocol the run ends on its last parameters.
  if (cfg.train.validation_reset) model.params().set_values(best.values);
  return result;
}

}  // namespace

IpmMetrics evaluate_ipm(const IpmModel& model, EpisodeList episodes, double locality_weight) {
  IpmMetrics m;
  if (episodes.empty()) return m;
  for (const Demonstration* d : episodes) {
    const InteractionPrediction pred = model.predict(*d);
    const int t = snap_to_tokens(pred.points, d->interaction_point);
    const IpmLossParts parts = ipm_loss(pred.scores, pred.points, pred.points[t], locality_weight);
    check_finite(parts.total, *d);
    m.cross_entropy += parts.cross_entropy;
    m.locality += parts.locality;
    m.loss += parts.total;
    m.accuracy += pred.index == t ? 1.0 : 0.0;
    m.mean_dist += (pred.point - d->interaction_point).norm();
  }
  const double n = static_cast<double>(episodes.size());
  m.cross_entropy /= n;
  m.locality /= n;
  m.loss /= n;
  m.accuracy /= n;
  m.mean_dist /= n;
  return m;
}

ApmMetrics evaluate_apm(const ApmModel& model, EpisodeList episodes, const LossConfig& loss) {
  ApmMetrics m;
  if (episodes.empty()) return m;
  for (const Demonstration* d : episodes) {
    const Vec3 origin = model.origin_for(*d, d->interaction_point);
    const PointCloud input = model.select_input(d->cloud, origin);
    const ActionTriplet target = relative_actions(*d, origin);
    const auto proprio = d->pre_action_states();
    const ApmRawPrediction raw = model.raw_predict(input, origin, proprio, d->command);
    const ApmLossParts parts = apm_loss(raw, target, loss.apm, loss.squared_orientation);
    check_finite(parts.total, *d);
    m.loss += parts.total;
    for (int i = 0; i < 3; ++i) {
      m.position_error += (raw.delta_p[i] - target.actions[i].delta_p).norm() / 3.0;
      const auto& q = raw.orientation[i];
      m.orientation_error += quat_angle(UnitQuaternion(q[0], q[1], q[2], q[3]), target.actions[i].q) / 3.0;
      m.gripper_accuracy += ((raw.grip_logit[i] >= 0 ? 1 : 0) == target.actions[i].g ? 1.0 : 0.0) / 3.0;
    }
  }
  const double n = static_cast<double>(episodes.size());
  m.loss /= n;
  m.position_error /= n;
  m.orientation_error /= n;
  m.gripper_accuracy /= n;
  return m;
}

TrainResult<IpmEpochRow> train_ipm(IpmModel& model, EpisodeList train, EpisodeList val, const SlapConfig& cfg,
                                   const TrainHooks& hooks) {
  require_splits(train, val);
  const double w = cfg.loss.locality_weight;
  auto step = [&](const Demonstration& demo, std::uint64_t seed, IpmEpochRow& row) {
    const Demonstration sample = cfg.augment.enabled ? augment_interaction_sample(demo, seed, cfg.augment) : demo;
    Tape tape;
    const IpmModel::Output out = model.forward(tape, sample.cloud, sample.command, sample.initial_state);
    const int target = snap_to_tokens(out.points, sample.interaction_point);
    IpmLossParts parts;
    const Var loss = ipm_loss(out.scores, out.points, target, w, &parts);
    check_finite(parts.total, demo);
    tape.backward(loss);
    row.train_ce += parts.cross_entropy;
    row.train_locality += parts.locality;
  };
  auto validate = [&](IpmEpochRow& row, double n) {
    row.train_ce /= n;
    row.train_locality /= n;
    const IpmMetrics m = evaluate_ipm(model, val, w);
    row.val_ce = m.cross_entropy;
    row.val_accuracy = m.accuracy;
    row.val_mean_dist = m.mean_dist;
    row.val_loss = m.loss;
  };
  return run_training<IpmEpochRow>(model, train, cfg, hooks, hooks.ipm_epoch_end, step, validate);
}

TrainResult<ApmEpochRow> train_apm(ApmModel& model, EpisodeList train, EpisodeList val, const SlapConfig& cfg,
                                   const TrainHooks& hooks) {
  require_splits(train, val);
  const bool relative = model.config().input != ApmInput::Absolute;
  auto step = [&](const Demonstration& demo, std::uint64_t seed, ApmEpochRow& row) {
    Vec3 center = model.origin_for(demo, demo.interaction_point);
    if (relative && cfg.augment.enabled) center = noisy_crop_center(center, derive_seed(seed, {1}), cfg.augment);
    Crop crop{model.select_input(demo.cloud, center), center};
    ActionTriplet target = relative_actions(demo, center);
    if (relative && cfg.augment.enabled) {
      JitteredCrop j = apm_offset_jitter(crop, target, derive_seed(seed, {2}), cfg.augment);
      crop = std::move(j.crop);
      target = j.target;
    }
    Tape tape;
    const ApmOutput out = model.forward(tape, crop.cloud, crop.center, target.proprio, demo.command);
    ApmLossParts parts;
    const Var loss = apm_loss(out, target, cfg.loss.apm, cfg.loss.squared_orientation, &parts);
    check_finite(parts.total, demo);
    tape.backward(loss);
    row.loss_position += parts.position;
    row.loss_orientation += parts.orientation;
    row.loss_gripper += parts.gripper;
  };
  auto validate = [&](ApmEpochRow& row, double n) {
    row.loss_position /= n;
    row.loss_orientation /= n;
    row.loss_gripper /= n;
    const ApmMetrics m = evaluate_apm(model, val, cfg.loss);
    row.val_position_error = m.position_error;
    row.val_orientation_error = m.orientation_error;
    row.val_gripper_accuracy = m.gripper_accuracy;
    row.val_loss = m.loss;
  };
  return run_training<ApmEpochRow>(model, train, cfg, hooks, hooks.apm_epoch_end, step, validate);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string ipm_csv(const std::vector<IpmEpochRow>& rows) {
  std::ostringstream out;
  out << "epoch,train_CE,train_Lloc,val_CE,val_accuracy,val_mean_dist\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << fmt(r.train_ce) << ',' << fmt(r.train_locality) << ',' << fmt(r.val_ce) << ','
        << fmt(r.val_accuracy) << ',' << fmt(r.val_mean_dist) << '\n';
  }
  return out.str();
}

std::string apm_csv(const std::vector<ApmEpochRow>& rows) {
  std::ostringstream out;
  out << "epoch,L_pos,L_ori,L_grip,val_pos_err_m,val_ori_err_rad,val_grip_acc\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << fmt(r.loss_position) << ',' << fmt(r.loss_orientation) << ',' << fmt(r.loss_gripper)
        << ',' << fmt(r.val_position_error) << ',' << fmt(r.val_orientation_error) << ','
        << fmt(r.val_gripper_accuracy) << '\n';
  }
  return out.str();
}

}  // namespace slap
