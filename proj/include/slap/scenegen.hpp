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

// Procedural tabletop scenes and expert keyframe demonstrations.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slap/geometry.hpp"

namespace slap {

/// Robot state: gripper closed flag, finger separation (m), task time step.
struct ProprioState {
  int g_act = 0;
  double g_w = 0.08;
  int ts = 0;

  static constexpr double kMaxWidth = 0.08;

  void validate() const;
  /// Network input (g_act, g_w, ts / 2).
  Eigen::Vector3d features() const;
};

struct Keyframe {
  Vec3 position = Vec3::Zero();
  UnitQuaternion q;
  int g = 0;
  /// State recorded at this keyframe, after its gripper command.
  ProprioState proprio;
};

/// Box rotated about the vertical axis.
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Zero();
  double yaw = 0.0;

  bool contains(const Vec3& p, double margin = 0.0) const;
  OrientedBox rotated_z(double angle, const Vec3& pivot) const;
};

struct WorkspaceBounds {
  Vec3 min{0.35, -0.25, 0.0};
  Vec3 max{0.75, 0.25, 0.30};
  Vec3 center() const { return 0.5 * (min + max); }
  bool nonempty() const { return (max.array() > min.array()).all(); }
};

enum class ObjectKind { BoxWithHandle, Container, StickObject, SphereObject };

const char* to_string(ObjectKind kind);

struct Demonstration {
  PointCloud cloud;
  std::string command;
  int task_id = 0;
  std::uint64_t seed = 0;
  ProprioState initial_state;
  std::array<Keyframe, 3> keyframes;
  int interaction_index = 1;
  Vec3 interaction_point = Vec3::Zero();
  OrientedBox target_box;
  OrientedBox part_box;
  Vec3 workspace_center = Vec3::Zero();
  int n_distractors = 0;

  /// Throws DatasetError if any episode invariant is violated.
  void validate(double gripper_threshold = 0.005) const;

  /// Robot state before each action; slot i carries ts = i.
  std::array<ProprioState, 3> pre_action_states() const;
};

/// Approach, interaction and departure actions with the robot state that
/// precedes each of them.
struct ActionTriplet {
  std::array<Action, 3> actions;
  std::array<ProprioState, 3> proprio;
};

/// Expert actions of `demo` expressed relative to `origin`.
ActionTriplet relative_actions(const Demonstration& demo, const Vec3& origin);

inline constexpr double kDefaultGripperThreshold = 0.005;

/// First keyframe i >= 1 whose finger width moved by more than `threshold`
/// from keyframe i-1; the middle keyframe when there is none.
std::pair<int, Vec3> label_interaction_point(std::span<const Keyframe> keyframes,
                                             double threshold = kDefaultGripperThreshold);

/// One keyframe of a template's program, expressed relative to the snapped
/// interaction point in the object frame.
struct KeyframeSpec {
  Vec3 offset = Vec3::Zero();
  UnitQuaternion q_local;
  int g = 0;
  double width = 0.08;
};

struct TaskTemplate {
  int task_id = 0;
  std::string name;
  std::vector<std::string> language_variants;
  ObjectKind object_kind = ObjectKind::BoxWithHandle;
  /// Initial gripper state (holding an object for the placing tasks).
  ProprioState initial_state;
  std::array<KeyframeSpec, 3> keyframe_program;
};

/// The eight-task suite.
const std::vector<TaskTemplate>& task_templates();
const TaskTemplate& task_template(int task_id);
/// Accepts a task name or a decimal id.
const TaskTemplate& find_template(const std::string& name_or_id);

struct SceneOptions {
  int views = 3;
  /// Surface samples per square millimeter and per view.
  double density = 0.1;
  /// Target yaw is drawn uniformly from [-max_yaw, max_yaw] (radians).
  double max_yaw = 0.5;
  double gripper_noise = 0.0005;
  double gripper_threshold = kDefaultGripperThreshold;
  std::size_t min_points = 2000;
};

/// Deterministic in (template, seed, n_distractors, bounds, options).
/// Throws PlacementError when objects cannot be placed without overlap.
Demonstration generate_scene(const TaskTemplate& tmpl, std::uint64_t seed, int n_distractors,
                             const WorkspaceBounds& bounds = {}, const SceneOptions& options = {});

// Episode file: "SLEP" magic, u32 version, fixed-layout header (see
// scenegen.cpp), then the cloud as an SLPC blob.
inline constexpr std::uint32_t kEpisodeVersion = 1;
inline constexpr std::size_t kCommandField = 256;

void write_episode(std::ostream& out, const Demonstration& demo);
Demonstration read_episode(std::istream& in);

}  // namespace slap
