#include "admc/arm_sim.hpp"

#include <algorithm>
#include <array>

#include "admc/error.hpp"

namespace admc {
namespace {

Vec3 clamp_norm(const Vec3& v, double max_norm) {
  const double n = v.norm();
  return n > max_norm ? v * (max_norm / n) : v;
}

std::array<Vec3, 3> box_axes(const Rotation& r) {
  return {r.apply({1, 0, 0}), r.apply({0, 1, 0}), r.apply({0, 0, 1})};
}

double projected_radius(const std::array<Vec3, 3>& axes, const Vec3& half, const Vec3& dir) {
  return half.x * std::abs(axes[0].dot(dir)) + half.y * std::abs(axes[1].dot(dir)) +
         half.z * std::abs(axes[2].dot(dir));
}

OrientedBox finger_span_box(const ArmState& arm) {
  const auto& g = arm.geometry;
  return {arm.end_effector.position, arm.end_effector.orientation,
          {0.5 * g.finger_depth, 0.5 * arm.finger_aperture * g.max_span, 0.5 * g.finger_height}};
}

}  // namespace

void VelocityLimits::validate() const {
  if (!(vel_trans > 0.0 && vel_rot > 0.0 && vel_fingers > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "velocity limits must be positive");
  }
}

Vec3 Workspace::clamp(const Vec3& p) const {
  return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y),
          std::clamp(p.z, min.z, max.z)};
}

bool Workspace::contains(const Vec3& p) const {
  return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
         p.z <= max.z;
}

double SceneObject::base_height() const {
  const auto axes = box_axes(pose.orientation);
  return pose.position.z - projected_radius(axes, half_extents, {0, 0, 1});
}

ArmState step(const ArmState& arm, const Vec7& cmd, double dt) {
  Vec7 c = cmd;
  for (double& e : c.v) e = std::clamp(e, -1.0, 1.0);

  ArmState next = arm;
  const double max_trans = arm.limits.vel_trans * dt;
  const double max_rot = arm.limits.vel_rot * dt;

  const Vec3 local = clamp_norm(Vec3{c[0], c[1], c[2]} * max_trans, max_trans);
  const Vec3 rotvec = clamp_norm(Vec3{c[3], c[4], c[5]} * max_rot, max_rot);

  const Pose& ee = arm.end_effector;
  next.end_effector.position = arm.workspace.clamp(ee.position + ee.orientation.apply(local));
  next.end_effector.orientation = ee.orientation * Rotation::from_rotation_vector(rotvec);

  const double floor = arm.held ? arm.held->grip_aperture : 0.0;
  const double aperture = std::clamp(
      arm.finger_aperture - c[6] * arm.limits.vel_fingers * dt, std::min(floor, arm.finger_aperture), 1.0);
  next.last_aperture_delta = aperture - arm.finger_aperture;
  next.finger_aperture = aperture;
  return next;
}

ArmState follow_me(const ArmState& arm, const Pose& target) {
  ArmState next = arm;
  next.end_effector = {arm.workspace.clamp(target.position), target.orientation, Frame::World};
  next.last_aperture_delta = 0.0;
  return next;
}

bool boxes_intersect(const OrientedBox& a, const OrientedBox& b) {
  const auto ax = box_axes(a.orientation);
  const auto bx = box_axes(b.orientation);
  const Vec3 d = b.center - a.center;

  auto separated = [&](const Vec3& axis) {
    const double len = axis.norm();
    if (len < 1e-12) return false;  // parallel edge pair, covered by face axes
    const Vec3 n = axis / len;
    return std::abs(d.dot(n)) > projected_radius(ax, a.half, n) + projected_radius(bx, b.half, n);
  };

  for (const auto& axis : ax) {
    if (separated(axis)) return false;
  }
  for (const auto& axis : bx) {
    if (separated(axis)) return false;
  }
  for (const auto& u : ax) {
    for (const auto& v : bx) {
      if (separated(u.cross(v))) return false;
    }
  }
  return true;
}

bool fingers_contact(const ArmState& arm, const SceneObject& obj) {
  const OrientedBox span = finger_span_box(arm);
  const OrientedBox body{obj.pose.position, obj.pose.orientation, obj.half_extents};
  if (!boxes_intersect(span, body)) return false;

  // the object must reach both finger planes, one on each side
  const Vec3 finger_axis = arm.end_effector.orientation.apply({0, 1, 0});
  const double c = (obj.pose.position - arm.end_effector.position).dot(finger_axis);
  const double r = projected_radius(box_axes(obj.pose.orientation), obj.half_extents, finger_axis);
  const double half_span = span.half.y;
  return c - r <= -half_span && c + r >= half_span;
}

ArmState grasp_check(const ArmState& arm, std::vector<SceneObject>& objects, double support_z) {
  ArmState next = arm;
  if (arm.held) {
    if (arm.last_aperture_delta > 0.0) {
      if (SceneObject* obj = find_object(objects, arm.held->id)) {
        obj->pose = compose(arm.end_effector, arm.held->relative);
        obj->pose.position.z -= obj->base_height() - support_z;
      }
      next.held.reset();
    }
    return next;
  }
  if (arm.last_aperture_delta >= 0.0) return next;

  for (const SceneObject& obj : objects) {
    if (!obj.graspable() || !fingers_contact(arm, obj)) continue;
    next.held = HeldObject{obj.id, relative_to(arm.end_effector, obj.pose), arm.finger_aperture};
    break;
  }
  return next;
}

void sync_held_object(const ArmState& arm, std::vector<SceneObject>& objects) {
  if (!arm.held) return;
  if (SceneObject* obj = find_object(objects, arm.held->id)) {
    obj->pose = compose(arm.end_effector, arm.held->relative);
  }
}

SceneObject* find_object(std::vector<SceneObject>& objects, const std::string& id) {
  auto it = std::ranges::find(objects, id, &SceneObject::id);
  return it == objects.end() ? nullptr : &*it;
}

const SceneObject* find_object(std::span<const SceneObject> objects, const std::string& id) {
  auto it = std::ranges::find(objects, id, &SceneObject::id);
  return it == objects.end() ? nullptr : &*it;
}

}  // namespace admc
