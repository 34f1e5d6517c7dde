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

#include "slap/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "slap/cloud_io.hpp"
#include "slap/errors.hpp"
#include "slap/random.hpp"

namespace slap {

void ProprioState::validate() const {
  if (g_act != 0 && g_act != 1) throw DatasetError("ProprioState: g_act must be 0 or 1");
  if (!(g_w >= 0.0 && g_w <= kMaxWidth)) throw DatasetError("ProprioState: finger width out of [0, 0.08]");
  if (ts < 0 || ts > 2) throw DatasetError("ProprioState: ts must be in {0, 1, 2}");
}

Eigen::Vector3d ProprioState::features() const {
  return {static_cast<double>(g_act), g_w, static_cast<double>(ts) / 2.0};
}

bool OrientedBox::contains(const Vec3& p, double margin) const {
  const Vec3 local = rotate_z(p - center, -yaw, Vec3::Zero());
  return (local.array().abs() <= half_extents.array() + margin).all();
}

OrientedBox OrientedBox::rotated_z(double angle, const Vec3& pivot) const {
  return {rotate_z(center, angle, pivot), half_extents, yaw + angle};
}

const char* to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::BoxWithHandle: return "box-with-handle";
    case ObjectKind::Container: return "container";
    case ObjectKind::StickObject: return "stick-object";
    case ObjectKind::SphereObject: return "sphere-object";
  }
  return "?";
}

std::pair<int, Vec3> label_interaction_point(std::span<const Keyframe> keyframes, double threshold) {
  if (keyframes.empty()) throw InvalidArgument("label_interaction_point: no keyframes");
  if (!(threshold > 0.0)) throw InvalidArgument("label_interaction_point: threshold must be positive");
  for (std::size_t i = 1; i < keyframes.size(); ++i) {
    if (std::abs(keyframes[i].proprio.g_w - keyframes[i - 1].proprio.g_w) > threshold) {
      return {static_cast<int>(i), keyframes[i].position};
    }
  }
  const std::size_t mid = keyframes.size() / 2;
  return {static_cast<int>(mid), keyframes[mid].position};
}

void Demonstration::validate(double gripper_threshold) const {
  if (cloud.empty()) throw DatasetError("episode has an empty cloud");
  try {
    cloud.validate();
  } catch (const InvalidArgument& e) {
    throw DatasetError(e.what());
  }
  initial_state.validate();
  if (initial_state.ts != 0) throw DatasetError("initial state must have ts = 0");
  for (std::size_t i = 0; i < keyframes.size(); ++i) {
    keyframes[i].proprio.validate();
    if (keyframes[i].proprio.ts != static_cast<int>(i)) throw DatasetError("keyframe ts out of sequence");
    if (keyframes[i].g != 0 && keyframes[i].g != 1) throw DatasetError("keyframe gripper command not binary");
    if ((keyframes[i].position - interaction_point).norm() > Action::kMaxOffset) {
      throw DatasetError("keyframe offset exceeds the workspace bound");
    }
  }
  const auto [index, point] = label_interaction_point(keyframes, gripper_threshold);
  if (index != interaction_index) throw DatasetError("interaction_index disagrees with the gripper-change label");
  if (point != interaction_point) throw DatasetError("interaction_point is not the interaction keyframe position");
}

std::array<ProprioState, 3> Demonstration::pre_action_states() const {
  std::array<ProprioState, 3> out;
  out[0] = initial_state;
  out[0].ts = 0;
  for (int i = 1; i < 3; ++i) {
    out[i] = keyframes[i - 1].proprio;
    out[i].ts = i;
  }
  return out;
}

ActionTriplet relative_actions(const Demonstration& demo, const Vec3& origin) {
  ActionTriplet out;
  out.proprio = demo.pre_action_states();
  for (int i = 0; i < 3; ++i) {
    out.actions[i].delta_p = demo.keyframes[i].position - origin;
    out.actions[i].q = demo.keyframes[i].q;
    out.actions[i].g = demo.keyframes[i].g;
  }
  return out;
}

// Task suite ---------------------------------------------------------------

namespace {

constexpr double kPi = std::numbers::pi;

UnitQuaternion rz(double a) { return UnitQuaternion::from_axis_angle(Vec3::UnitZ(), a); }
UnitQuaternion ry(double a) { return UnitQuaternion::from_axis_angle(Vec3::UnitY(), a); }
UnitQuaternion rx(double a) { return UnitQuaternion::from_axis_angle(Vec3::UnitX(), a); }

// Tool z-axis along the object's +x (into the front face), fingers horizontal.
UnitQuaternion front_grasp() { return ry(kPi / 2); }
UnitQuaternion front_grasp_vertical() { return ry(kPi / 2) * rz(kPi / 2); }
UnitQuaternion top_down() { return rx(kPi); }

constexpr double kOpen = 0.08;

std::vector<TaskTemplate> make_templates() {
  const ProprioState open_state{0, kOpen, 0};
  const ProprioState holding{1, 0.03, 0};
  std::vector<TaskTemplate> t;
  t.push_back({0, "open_top_drawer",
               {"open the top drawer of the shelf on the table", "pull the first drawer out", "open the highest drawer"},
               ObjectKind::BoxWithHandle, open_state,
               {{{Vec3(-0.08, 0, 0), front_grasp(), 0, kOpen},
                 {Vec3::Zero(), front_grasp(), 1, 0.012},
                 {Vec3(-0.10, 0, 0), front_grasp(), 1, 0.012}}}});
  t.push_back({1, "open_bottom_drawer",
               {"open the bottom drawer of the shelf on the table", "pull the second drawer out", "open the lowest drawer"},
               ObjectKind::BoxWithHandle, open_state,
               {{{Vec3(-0.08, 0, 0), front_grasp_vertical(), 0, kOpen},
                 {Vec3::Zero(), front_grasp_vertical(), 1, 0.008},
                 {Vec3(-0.10, 0, 0), front_grasp_vertical(), 1, 0.008}}}});
  t.push_back({2, "close_drawer",
               {"close the drawers", "push in the drawer", "close the drawer with your gripper"},
               ObjectKind::BoxWithHandle, open_state,
               {{{Vec3(-0.07, 0, 0), front_grasp(), 0, kOpen},
                 {Vec3::Zero(), front_grasp(), 1, 0.0},
                 {Vec3(0.05, 0, 0), front_grasp(), 1, 0.0}}}});
  t.push_back({3, "place_in_drawer",
               {"put it into the drawer", "place the object into the open drawer", "add the object to the drawer"},
               ObjectKind::BoxWithHandle, holding,
               {{{Vec3(0, 0, 0.12), top_down(), 1, 0.03},
                 {Vec3::Zero(), top_down(), 0, kOpen},
                 {Vec3(0, 0, 0.12), top_down(), 0, kOpen}}}});
  t.push_back({4, "pick_lemon_from_basket",
               {"pick the lemon from inside the white basket", "grab a lemon from the basket on the table",
                "hand me a lemon from that white basket"},
               ObjectKind::SphereObject, open_state,
               {{{Vec3(0, 0, 0.12), top_down(), 0, kOpen},
                 {Vec3::Zero(), top_down(), 1, 0.040},
                 {Vec3(0, 0, 0.15), top_down(), 1, 0.040}}}});
  t.push_back({5, "place_in_bowl",
               {"place the lemon from your gripper into the bowl", "add the lemon to a bowl on the table",
                "put the lemon in the bowl"},
               ObjectKind::Container, holding,
               {{{Vec3(0, 0, 0.10), top_down(), 1, 0.03},
                 {Vec3::Zero(), top_down(), 0, kOpen},
                 {Vec3(0, 0, 0.10), top_down(), 0, kOpen}}}});
  t.push_back({6, "place_in_basket",
               {"place the object in your hand into the basket", "put the object into the white basket",
                "place the thing into the basket on the table"},
               ObjectKind::Container, holding,
               {{{Vec3(0, 0, 0.11), top_down(), 1, 0.03},
                 {Vec3::Zero(), top_down(), 0, kOpen},
                 {Vec3(0, 0, 0.11), top_down(), 0, kOpen}}}});
  t.push_back({7, "pick_bottle",
               {"pick up a bottle from the table", "pick up a bottle", "grab my water bottle"},
               ObjectKind::StickObject, open_state,
               {{{Vec3(-0.08, 0, 0), front_grasp(), 0, kOpen},
                 {Vec3::Zero(), front_grasp(), 1, 0.044},
                 {Vec3(0, 0, 0.10), front_grasp(), 1, 0.044}}}});
  return t;
}

}  // namespace

const std::vector<TaskTemplate>& task_templates() {
  static const std::vector<TaskTemplate> kTemplates = make_templates();
  return kTemplates;
}

const TaskTemplate& task_template(int task_id) {
  const auto& all = task_templates();
  if (task_id < 0 || task_id >= static_cast<int>(all.size())) {
    throw InvalidArgument("unknown task id " + std::to_string(task_id));
  }
  return all[task_id];
}

const TaskTemplate& find_template(const std::string& name_or_id) {
  for (const auto& t : task_templates()) {
    if (t.name == name_or_id || std::to_string(t.task_id) == name_or_id) return t;
  }
  throw InvalidArgument("unknown task template: " + name_or_id);
}

// Scene construction -------------------------------------------------------

namespace {

struct Primitive {
  enum class Type { Rect, Cylinder, Disk, Sphere } type = Type::Rect;
  Vec3 center = Vec3::Zero();
  // Rect: center + s*a*u + t*b*v, normal n. Disk: radius a, normal n.
  // Cylinder: center + r*(cos e1 + sin e2) + s*axis, s in [0, b], radius a.
  Vec3 u = Vec3::UnitX(), v = Vec3::UnitY(), n = Vec3::UnitZ(), axis = Vec3::UnitZ();
  double a = 0.0, b = 0.0;
  double normal_sign = 1.0;
  bool two_sided = false;
  Vec3 color = Vec3::Zero();

  double area() const {
    switch (type) {
      case Type::Rect: return 4.0 * a * b;
      case Type::Cylinder: return 2.0 * kPi * a * b;
      case Type::Disk: return kPi * a * a;
      case Type::Sphere: return 4.0 * kPi * a * a;
    }
    return 0.0;
  }
};

struct SceneObject {
  std::vector<Primitive> prims;  // object frame
  double footprint = 0.05;       // placement radius
  bool is_target = false;
  OrientedBox part;              // object frame, targets only
  Vec3 contact = Vec3::Zero();   // object frame, targets only
};

const std::array<Vec3, 10> kPalette = {
    Vec3(0.85, 0.85, 0.80), Vec3(0.55, 0.35, 0.20), Vec3(0.20, 0.45, 0.80), Vec3(0.25, 0.65, 0.30),
    Vec3(0.60, 0.60, 0.65), Vec3(0.90, 0.55, 0.15), Vec3(0.50, 0.25, 0.60), Vec3(0.15, 0.60, 0.65),
    Vec3(0.80, 0.30, 0.45), Vec3(0.35, 0.30, 0.25)};
const Vec3 kLemon(0.95, 0.85, 0.25);

Vec3 pick_color(Rng& rng) {
  return kPalette[std::uniform_int_distribution<std::size_t>(0, kPalette.size() - 1)(rng)];
}

void add_rect(std::vector<Primitive>& out, const Vec3& c, const Vec3& u, double a, const Vec3& v, double b,
              const Vec3& n, const Vec3& color, bool two_sided = false) {
  Primitive p;
  p.type = Primitive::Type::Rect;
  p.center = c;
  p.u = u;
  p.v = v;
  p.a = a;
  p.b = b;
  p.n = n;
  p.color = color;
  p.two_sided = two_sided;
  out.push_back(p);
}

// Closed box from its center and half extents; the bottom face is omitted.
void add_box(std::vector<Primitive>& out, const Vec3& c, const Vec3& h, const Vec3& color) {
  const Vec3 X = Vec3::UnitX(), Y = Vec3::UnitY(), Z = Vec3::UnitZ();
  add_rect(out, c + Vec3(-h.x(), 0, 0), Y, h.y(), Z, h.z(), -X, color);
  add_rect(out, c + Vec3(h.x(), 0, 0), Y, h.y(), Z, h.z(), X, color);
  add_rect(out, c + Vec3(0, -h.y(), 0), X, h.x(), Z, h.z(), -Y, color);
  add_rect(out, c + Vec3(0, h.y(), 0), X, h.x(), Z, h.z(), Y, color);
  add_rect(out, c + Vec3(0, 0, h.z()), X, h.x(), Y, h.y(), Z, color);
}

// Open-top container with thin two-sided walls, bottom at z = 0.
void add_open_box(std::vector<Primitive>& out, double hx, double hy, double height, const Vec3& color) {
  const Vec3 X = Vec3::UnitX(), Y = Vec3::UnitY(), Z = Vec3::UnitZ();
  const double hz = height / 2;
  add_rect(out, Vec3(-hx, 0, hz), Y, hy, Z, hz, -X, color, true);
  add_rect(out, Vec3(hx, 0, hz), Y, hy, Z, hz, X, color, true);
  add_rect(out, Vec3(0, -hy, hz), X, hx, Z, hz, -Y, color, true);
  add_rect(out, Vec3(0, hy, hz), X, hx, Z, hz, Y, color, true);
  add_rect(out, Vec3(0, 0, 0.002), X, hx, Y, hy, Z, color);
}

void add_cylinder(std::vector<Primitive>& out, const Vec3& base, const Vec3& axis, double radius, double length,
                  const Vec3& color, bool two_sided = false) {
  Primitive p;
  p.type = Primitive::Type::Cylinder;
  p.center = base;
  p.axis = axis.normalized();
  p.u = p.axis.unitOrthogonal();
  p.v = p.axis.cross(p.u);
  p.a = radius;
  p.b = length;
  p.color = color;
  p.two_sided = two_sided;
  out.push_back(p);
}

void add_disk(std::vector<Primitive>& out, const Vec3& c, double radius, const Vec3& n, const Vec3& color) {
  Primitive p;
  p.type = Primitive::Type::Disk;
  p.center = c;
  p.n = n.normalized();
  p.u = p.n.unitOrthogonal();
  p.v = p.n.cross(p.u);
  p.a = radius;
  p.color = color;
  out.push_back(p);
}

void add_sphere(std::vector<Primitive>& out, const Vec3& c, double radius, const Vec3& color) {
  Primitive p;
  p.type = Primitive::Type::Sphere;
  p.center = c;
  p.a = radius;
  p.color = color;
  out.push_back(p);
}

// Cabinet: body 6 cm deep (x), 8 cm wide (y), 8 cm tall; front face at
// x = -0.03 facing the robot. Drawer bands: bottom z in [0.004, 0.036], top z
// in [0.044, 0.076]. `open_top` / `open_bottom` give the pull-out distance.
constexpr double kCabFront = -0.03;
constexpr double kTopZ = 0.06;
constexpr double kBottomZ = 0.02;
constexpr double kDrawerHalfZ = 0.016;

SceneObject make_cabinet(Rng& rng, double open_top, double open_bottom) {
  SceneObject obj;
  const Vec3 body = pick_color(rng);
  const Vec3 handle = body * 0.45;
  const Vec3 X = Vec3::UnitX(), Y = Vec3::UnitY(), Z = Vec3::UnitZ();
  const double hx = 0.03, hy = 0.04, hz = 0.04;
  // Body without its front face.
  add_rect(obj.prims, Vec3(hx, 0, hz), Y, hy, Z, hz, X, body);
  add_rect(obj.prims, Vec3(0, -hy, hz), X, hx, Z, hz, -Y, body);
  add_rect(obj.prims, Vec3(0, hy, hz), X, hx, Z, hz, Y, body);
  add_rect(obj.prims, Vec3(0, 0, 2 * hz), X, hx, Y, hy, Z, body);
  // Front face split into three horizontal bands: bottom drawer, divider, top drawer.
  struct Band {
    double z_lo, z_hi, open, handle_z;
    bool top;
  };
  const Band bands[] = {{0.0, 0.04, open_bottom, kBottomZ, false}, {0.04, 0.08, open_top, kTopZ, true}};
  for (const Band& band : bands) {
    const double zc = 0.5 * (band.z_lo + band.z_hi);
    const double half = 0.5 * (band.z_hi - band.z_lo);
    const double front = kCabFront - band.open;
    if (band.open > 0) {
      // Drawer pulled out: front panel, side walls and inner bottom of the exposed part.
      add_rect(obj.prims, Vec3(front, 0, zc), Y, hy - 0.002, Z, half - 0.002, -X, body);
      add_rect(obj.prims, Vec3(front + band.open / 2, -hy + 0.002, zc), X, band.open / 2, Z, half - 0.002, -Y,
               body, true);
      add_rect(obj.prims, Vec3(front + band.open / 2, hy - 0.002, zc), X, band.open / 2, Z, half - 0.002, Y, body,
               true);
      add_rect(obj.prims, Vec3(front + band.open / 2, 0, band.z_lo + 0.004), X, band.open / 2, Y, hy - 0.004, Z,
               body);
    } else {
      add_rect(obj.prims, Vec3(kCabFront, 0, zc), Y, hy, Z, half, -X, body);
    }
    if (band.top) {
      // Small loop handle.
      add_box(obj.prims, Vec3(front - 0.006, 0, band.handle_z), Vec3(0.006, 0.015, 0.004), handle);
    } else {
      // Cylindrical rod on two standoffs.
      add_cylinder(obj.prims, Vec3(front - 0.012, -0.02, band.handle_z), Y, 0.004, 0.04, handle);
      add_box(obj.prims, Vec3(front - 0.005, -0.016, band.handle_z), Vec3(0.005, 0.002, 0.002), handle);
      add_box(obj.prims, Vec3(front - 0.005, 0.016, band.handle_z), Vec3(0.005, 0.002, 0.002), handle);
    }
  }
  obj.footprint = 0.075;
  return obj;
}

SceneObject make_basket(Rng& rng) {
  SceneObject obj;
  add_open_box(obj.prims, 0.035, 0.04, 0.035, pick_color(rng));
  obj.footprint = 0.06;
  return obj;
}

SceneObject make_bowl(Rng& rng) {
  SceneObject obj;
  const Vec3 c = pick_color(rng);
  add_cylinder(obj.prims, Vec3::Zero(), Vec3::UnitZ(), 0.04, 0.035, c, true);
  add_disk(obj.prims, Vec3(0, 0, 0.002), 0.04, Vec3::UnitZ(), c);
  obj.footprint = 0.05;
  return obj;
}

SceneObject make_bottle(Rng& rng) {
  SceneObject obj;
  const Vec3 c = pick_color(rng);
  add_cylinder(obj.prims, Vec3::Zero(), Vec3::UnitZ(), 0.022, 0.10, c);
  add_disk(obj.prims, Vec3(0, 0, 0.10), 0.022, Vec3::UnitZ(), c);
  add_cylinder(obj.prims, Vec3(0, 0, 0.10), Vec3::UnitZ(), 0.01, 0.025, c * 0.7);
  add_disk(obj.prims, Vec3(0, 0, 0.125), 0.01, Vec3::UnitZ(), c * 0.7);
  obj.footprint = 0.035;
  return obj;
}

SceneObject make_lemon() {
  SceneObject obj;
  add_sphere(obj.prims, Vec3(0, 0, 0.02), 0.02, kLemon);
  obj.footprint = 0.03;
  return obj;
}

SceneObject make_block(Rng& rng) {
  SceneObject obj;
  add_box(obj.prims, Vec3(0, 0, 0.02), Vec3(0.02, 0.02, 0.02), pick_color(rng));
  obj.footprint = 0.035;
  return obj;
}

SceneObject make_target(int task_id, Rng& rng) {
  SceneObject obj;
  switch (task_id) {
    case 0: {
      obj = make_cabinet(rng, 0.0, 0.0);
      obj.part = {Vec3(kCabFront - 0.006, 0, kTopZ), Vec3(0.006, 0.015, 0.004), 0.0};
      obj.contact = Vec3(kCabFront - 0.012, 0, kTopZ);
      break;
    }
    case 1: {
      obj = make_cabinet(rng, 0.0, 0.0);
      obj.part = {Vec3(kCabFront - 0.012, 0, kBottomZ), Vec3(0.004, 0.02, 0.004), 0.0};
      obj.contact = Vec3(kCabFront - 0.016, 0, kBottomZ);
      break;
    }
    case 2: {
      const double open = 0.05;
      const bool top = std::bernoulli_distribution(0.5)(rng);
      obj = make_cabinet(rng, top ? open : 0.0, top ? 0.0 : open);
      const double z = top ? kTopZ : kBottomZ;
      obj.part = {Vec3(kCabFront - open, 0, z), Vec3(0.003, 0.04, kDrawerHalfZ), 0.0};
      obj.contact = Vec3(kCabFront - open, 0.027, z);
      break;
    }
    case 3: {
      const double open = 0.06;
      obj = make_cabinet(rng, open, 0.0);
      obj.part = {Vec3(kCabFront - open / 2, 0, 0.044 + 0.012), Vec3(open / 2, 0.038, 0.012), 0.0};
      obj.contact = Vec3(kCabFront - open / 2, uniform(rng, -0.015, 0.015), 0.048);
      break;
    }
    case 4: {
      obj = make_basket(rng);
      const Vec3 at(uniform(rng, -0.01, 0.01), uniform(rng, -0.015, 0.015), 0.0);
      for (auto p : make_lemon().prims) {
        p.center += at;
        obj.prims.push_back(p);
      }
      obj.part = {at + Vec3(0, 0, 0.02), Vec3(0.02, 0.02, 0.02), 0.0};
      obj.contact = at + Vec3(0, 0, 0.04);
      break;
    }
    case 5: {
      obj = make_bowl(rng);
      obj.part = {Vec3(0, 0, 0.015), Vec3(0.036, 0.036, 0.015), 0.0};
      obj.contact = Vec3(uniform(rng, -0.01, 0.01), uniform(rng, -0.01, 0.01), 0.002);
      break;
    }
    case 6: {
      obj = make_basket(rng);
      obj.part = {Vec3(0, 0, 0.015), Vec3(0.033, 0.038, 0.015), 0.0};
      obj.contact = Vec3(uniform(rng, -0.015, 0.015), uniform(rng, -0.02, 0.02), 0.002);
      break;
    }
    case 7: {
      obj = make_bottle(rng);
      obj.part = {Vec3(0, 0, 0.05), Vec3(0.022, 0.022, 0.05), 0.0};
      obj.contact = Vec3(-0.022, 0, 0.065);
      break;
    }
    default: throw InvalidArgument("unknown task id " + std::to_string(task_id));
  }
  obj.is_target = true;
  return obj;
}

enum class DistractorKind { Lemon, Bottle, Bowl, Basket, Block };

SceneObject make_distractor(DistractorKind kind, Rng& rng) {
  switch (kind) {
    case DistractorKind::Lemon: return make_lemon();
    case DistractorKind::Bottle: return make_bottle(rng);
    case DistractorKind::Bowl: return make_bowl(rng);
    case DistractorKind::Basket: return make_basket(rng);
    case DistractorKind::Block: return make_block(rng);
  }
  return make_block(rng);
}

std::vector<DistractorKind> distractor_pool(ObjectKind target) {
  using D = DistractorKind;
  switch (target) {
    case ObjectKind::BoxWithHandle: return {D::Lemon, D::Bottle, D::Bowl, D::Basket, D::Block};
    case ObjectKind::Container: return {D::Lemon, D::Bottle, D::Block};
    case ObjectKind::StickObject: return {D::Lemon, D::Bowl, D::Basket, D::Block};
    case ObjectKind::SphereObject: return {D::Bottle, D::Bowl, D::Block};
  }
  return {D::Block};
}

struct Placement {
  double x = 0, y = 0, yaw = 0;
  Vec3 to_world(const Vec3& p) const { return rotate_z(p, yaw, Vec3::Zero()) + Vec3(x, y, 0); }
  Vec3 rotate(const Vec3& d) const { return rotate_z(d, yaw, Vec3::Zero()); }
};

// Camera positions for the pre-defined scanning views, in the base frame.
Vec3 camera_position(int view, const WorkspaceBounds& bounds) {
  const Vec3 c = bounds.center();
  switch (view % 3) {
    case 0: return Vec3(0.0, c.y() - 0.35, 0.55);
    case 1: return Vec3(0.0, c.y() + 0.35, 0.55);
    default: return Vec3(c.x() - 0.1 * (view / 3), c.y(), 0.9);
  }
}

void sample_view(const SceneObject& obj, const Placement& pose, const Vec3& camera, int view, double density,
                 Rng& rng, PointCloud& out) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (const Primitive& prim : obj.prims) {
    const auto count = static_cast<std::size_t>(std::llround(prim.area() * density * 1e6));
    for (std::size_t k = 0; k < count; ++k) {
      Vec3 p, n;
      switch (prim.type) {
        case Primitive::Type::Rect: {
          const double s = 2.0 * u01(rng) - 1.0, t = 2.0 * u01(rng) - 1.0;
          p = prim.center + s * prim.a * prim.u + t * prim.b * prim.v;
          n = prim.n;
          break;
        }
        case Primitive::Type::Cylinder: {
          const double phi = 2.0 * kPi * u01(rng), s = u01(rng) * prim.b;
          const Vec3 radial = std::cos(phi) * prim.u + std::sin(phi) * prim.v;
          p = prim.center + prim.a * radial + s * prim.axis;
          n = radial;
          break;
        }
        case Primitive::Type::Disk: {
          const double phi = 2.0 * kPi * u01(rng), r = prim.a * std::sqrt(u01(rng));
          p = prim.center + r * (std::cos(phi) * prim.u + std::sin(phi) * prim.v);
          n = prim.n;
          break;
        }
        case Primitive::Type::Sphere: {
          const double z = 2.0 * u01(rng) - 1.0, phi = 2.0 * kPi * u01(rng);
          const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
          n = Vec3(rxy * std::cos(phi), rxy * std::sin(phi), z);
          p = prim.center + prim.a * n;
          break;
        }
      }
      const Vec3 pw = pose.to_world(p);
      const Vec3 nw = pose.rotate(n);
      const double facing = nw.dot(camera - pw);
      if (prim.two_sided ? facing == 0.0 : facing <= 0.0) continue;
      out.push_back(pw, prim.color, view);
    }
  }
}

double noisy_width(double w, double noise, Rng& rng) {
  return std::clamp(w + gaussian(rng, noise), 0.0, ProprioState::kMaxWidth);
}

Demonstration generate_once(const TaskTemplate& tmpl, std::uint64_t seed, int n_distractors,
                            const WorkspaceBounds& bounds, const SceneOptions& options, double density) {
  Rng rng(derive_seed(seed, {0x5CE7E, static_cast<std::uint64_t>(tmpl.task_id)}));
  std::vector<SceneObject> objects;
  objects.push_back(make_target(tmpl.task_id, rng));
  const auto pool = distractor_pool(tmpl.object_kind);
  for (int i = 0; i < n_distractors; ++i) {
    const auto kind = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    objects.push_back(make_distractor(kind, rng));
  }

  std::vector<Placement> poses;
  for (const SceneObject& obj : objects) {
    const double lo_x = bounds.min.x() + obj.footprint, hi_x = bounds.max.x() - obj.footprint;
    const double lo_y = bounds.min.y() + obj.footprint, hi_y = bounds.max.y() - obj.footprint;
    if (lo_x > hi_x || lo_y > hi_y) throw PlacementError("workspace too small for object footprint");
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      Placement p{uniform(rng, lo_x, hi_x), uniform(rng, lo_y, hi_y),
                  obj.is_target ? uniform(rng, -options.max_yaw, options.max_yaw) : uniform(rng, -kPi, kPi)};
      placed = true;
      for (std::size_t j = 0; j < poses.size(); ++j) {
        const double d = std::hypot(p.x - poses[j].x, p.y - poses[j].y);
        if (d < obj.footprint + objects[j].footprint + 0.01) {
          placed = false;
          break;
        }
      }
      if (placed) poses.push_back(p);
    }
    if (!placed) throw PlacementError("could not place object without overlap after 100 attempts");
  }

  PointCloud raw;
  for (int view = 0; view < options.views; ++view) {
    const Vec3 cam = camera_position(view, bounds);
    for (std::size_t i = 0; i < objects.size(); ++i) sample_view(objects[i], poses[i], cam, view, density, rng, raw);
  }
  round_to_float(raw);
  Demonstration demo;
  demo.cloud = dedup_voxelize(raw, 0.001);
  round_to_float(demo.cloud);
  demo.task_id = tmpl.task_id;
  demo.seed = seed;
  demo.workspace_center = bounds.center();
  demo.n_distractors = n_distractors;
  demo.command = tmpl.language_variants[std::uniform_int_distribution<std::size_t>(
      0, tmpl.language_variants.size() - 1)(rng)];

  const SceneObject& target = objects.front();
  const Placement& pose = poses.front();
  // Labeled boxes are padded by the surface sampling margin.
  constexpr double kSurfaceMargin = 0.003;
  demo.part_box = {pose.to_world(target.part.center), target.part.half_extents + Vec3::Constant(kSurfaceMargin),
                   pose.yaw};

  // Target bounding box from the generated target surface, in the object frame.
  PointCloud target_raw;
  for (int view = 0; view < options.views; ++view) {
    Rng box_rng(derive_seed(seed, {0xB0B, static_cast<std::uint64_t>(view)}));
    sample_view(target, Placement{}, camera_position(view, bounds), view, 0.02, box_rng, target_raw);
  }
  Vec3 lo = target_raw.positions.front(), hi = lo;
  for (const auto& p : target_raw.positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  for (const auto& prim : target.prims) {  // cover unsampled extremes
    lo = lo.cwiseMin(prim.center);
    hi = hi.cwiseMax(prim.center);
  }
  demo.target_box = {pose.to_world(0.5 * (lo + hi)), 0.5 * (hi - lo) + Vec3::Constant(kSurfaceMargin), pose.yaw};

  // Snap the nominal contact into the token grid, restricted to the labeled part.
  const PointCloud tokens = grid_downsample(demo.cloud, 0.005);
  const Vec3 contact = pose.to_world(target.contact);
  double best = std::numeric_limits<double>::infinity();
  Vec3 snapped = contact;
  for (const auto& p : tokens.positions) {
    if (!demo.part_box.contains(p) || !demo.target_box.contains(p)) continue;
    const double d = (p - contact).squaredNorm();
    if (d < best) {
      best = d;
      snapped = p;
    }
  }
  if (!std::isfinite(best)) throw PlacementError("labeled part is not visible in the token grid");
  demo.interaction_point = snapped;

  demo.initial_state = tmpl.initial_state;
  demo.initial_state.g_w = noisy_width(tmpl.initial_state.g_w, options.gripper_noise, rng);
  for (int i = 0; i < 3; ++i) {
    const KeyframeSpec& spec = tmpl.keyframe_program[i];
    Keyframe& kf = demo.keyframes[i];
    kf.position = snapped + pose.rotate(spec.offset);
    kf.q = rz(pose.yaw) * spec.q_local;
    kf.g = spec.g;
    kf.proprio = {spec.g, noisy_width(spec.width, options.gripper_noise, rng), i};
  }
  const auto [index, point] = label_interaction_point(demo.keyframes, options.gripper_threshold);
  demo.interaction_index = index;
  demo.keyframes[index].position = snapped;
  demo.interaction_point = point;
  return demo;
}

}  // namespace

Demonstration generate_scene(const TaskTemplate& tmpl, std::uint64_t seed, int n_distractors,
                             const WorkspaceBounds& bounds, const SceneOptions& options) {
  if (n_distractors < 0) throw InvalidArgument("generate_scene: n_distractors must be >= 0");
  if (!bounds.nonempty()) throw InvalidArgument("generate_scene: empty workspace bounds");
  if (options.views < 1) throw InvalidArgument("generate_scene: need at least one view");
  double density = options.density;
  for (int tries = 0; tries < 4; ++tries, density *= 2.0) {
    Demonstration demo = generate_once(tmpl, seed, n_distractors, bounds, options, density);
    if (demo.cloud.size() >= options.min_points) {
      demo.validate(options.gripper_threshold);
      return demo;
    }
  }
  throw PlacementError("scene does not reach the minimum point count");
}

// Episode IO ---------------------------------------------------------------

namespace {

void write_vec(std::ostream& out, const Vec3& v) {
  for (int k = 0; k < 3; ++k) binio::write<double>(out, v[k]);
}

Vec3 read_vec(std::istream& in) {
  Vec3 v;
  for (int k = 0; k < 3; ++k) v[k] = binio::read<double>(in);
  return v;
}

void write_state(std::ostream& out, const ProprioState& s) {
  binio::write<std::uint8_t>(out, static_cast<std::uint8_t>(s.g_act));
  binio::write<double>(out, s.g_w);
  binio::write<std::int32_t>(out, s.ts);
}

ProprioState read_state(std::istream& in) {
  ProprioState s;
  s.g_act = binio::read<std::uint8_t>(in);
  s.g_w = binio::read<double>(in);
  s.ts = binio::read<std::int32_t>(in);
  return s;
}

void write_box(std::ostream& out, const OrientedBox& b) {
  write_vec(out, b.center);
  write_vec(out, b.half_extents);
  binio::write<double>(out, b.yaw);
}

OrientedBox read_box(std::istream& in) {
  OrientedBox b;
  b.center = read_vec(in);
  b.half_extents = read_vec(in);
  b.yaw = binio::read<double>(in);
  return b;
}

}  // namespace

// Header layout after magic + version:
//   u32 task_id, u64 seed, char[256] command (NUL padded),
//   state initial (u8 g_act, f64 g_w, i32 ts),
//   3 x keyframe (f64[3] position, f64[4] wxyz, u8 g, state),
//   i32 interaction_index, f64[3] interaction_point,
//   box target, box part (f64[3] center, f64[3] half extents, f64 yaw),
//   f64[3] workspace_center, u32 n_distractors
void write_episode(std::ostream& out, const Demonstration& demo) {
  if (demo.command.size() >= kCommandField) throw InvalidArgument("episode command too long");
  binio::write_bytes(out, "SLEP", 4);
  binio::write<std::uint32_t>(out, kEpisodeVersion);
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(demo.task_id));
  binio::write<std::uint64_t>(out, demo.seed);
  char command[kCommandField] = {};
  std::memcpy(command, demo.command.data(), demo.command.size());
  binio::write_bytes(out, command, kCommandField);
  write_state(out, demo.initial_state);
  for (const Keyframe& kf : demo.keyframes) {
    write_vec(out, kf.position);
    const Eigen::Vector4d q = kf.q.coeffs_wxyz();
    for (int k = 0; k < 4; ++k) binio::write<double>(out, q[k]);
    binio::write<std::uint8_t>(out, static_cast<std::uint8_t>(kf.g));
    write_state(out, kf.proprio);
  }
  binio::write<std::int32_t>(out, demo.interaction_index);
  write_vec(out, demo.interaction_point);
  write_box(out, demo.target_box);
  write_box(out, demo.part_box);
  write_vec(out, demo.workspace_center);
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(demo.n_distractors));
  write_slpc(out, demo.cloud);
}

Demonstration read_episode(std::istream& in) {
  char magic[4];
  binio::read_bytes(in, magic, 4);
  if (std::memcmp(magic, "SLEP", 4) != 0) throw FormatError("episode: bad magic");
  if (binio::read<std::uint32_t>(in) != kEpisodeVersion) throw FormatError("episode: unsupported version");
  Demonstration demo;
  demo.task_id = static_cast<int>(binio::read<std::uint32_t>(in));
  demo.seed = binio::read<std::uint64_t>(in);
  char command[kCommandField];
  binio::read_bytes(in, command, kCommandField);
  command[kCommandField - 1] = '\0';
  demo.command = command;
  demo.initial_state = read_state(in);
  for (Keyframe& kf : demo.keyframes) {
    kf.position = read_vec(in);
    double q[4];
    for (double& c : q) c = binio::read<double>(in);
    kf.q = UnitQuaternion(q[0], q[1], q[2], q[3]);
    kf.g = binio::read<std::uint8_t>(in);
    kf.proprio = read_state(in);
  }
  demo.interaction_index = binio::read<std::int32_t>(in);
  demo.interaction_point = read_vec(in);
  demo.target_box = read_box(in);
  demo.part_box = read_box(in);
  demo.workspace_center = read_vec(in);
  demo.n_distractors = static_cast<int>(binio::read<std::uint32_t>(in));
  demo.cloud = read_slpc(in);
  return demo;
}

}  // namespace slap
