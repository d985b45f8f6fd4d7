/**
 * @file arm_sim.hpp
 * @brief End-effector level kinematic simulation of the assistive arm.
 *
 * There is no joint chain: commands move the tool center point directly.
 * Grasping is logic-based. An object counts as grasped when both fingers
 * touch it while the gripper is closing, and it stays rigidly attached until
 * the fingers open again.
 */

#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "admc/core_math.hpp"

namespace admc {

struct VelocityLimits {
  double vel_trans = 0.2;    ///< m/s
  double vel_rot = 1.0;      ///< rad/s
  double vel_fingers = 1.0;  ///< aperture/s

  void validate() const;
  bool operator==(const VelocityLimits&) const = default;
};

/// Axis-aligned box the tool center point must stay inside.
struct Workspace {
  Vec3 min{-0.6, -0.4, 0.01};
  Vec3 max{0.6, 0.4, 0.6};

  Vec3 clamp(const Vec3& p) const;
  bool contains(const Vec3& p) const;
};

struct GripperGeometry {
  double max_span = 0.12;      ///< finger distance at aperture 1, meters
  double finger_depth = 0.04;  ///< along gripper X
  double finger_height = 0.02; ///< along gripper Z
};

inline const std::string kGraspableTag = "Graspable";

struct SceneObject {
  std::string id;
  std::string mesh;
  Pose pose;
  Vec3 half_extents{0.025, 0.025, 0.025};
  std::set<std::string> tags;
  bool movable = true;

  bool graspable() const { return movable && tags.contains(kGraspableTag); }
  /// Height of the lowest box corner above z = 0.
  double base_height() const;
};

struct HeldObject {
  std::string id;
  Pose relative;              ///< object pose in the gripper frame
  double grip_aperture = 0.0; ///< fingers cannot close past the object

  bool operator==(const HeldObject&) const = default;
};

struct ArmState {
  Pose end_effector;
  double finger_aperture = 1.0;
  std::optional<HeldObject> held;
  VelocityLimits limits;
  Workspace workspace;
  GripperGeometry geometry;
  double last_aperture_delta = 0.0;  ///< change applied by the latest step
};

/// Integrates one command. Translation is taken in the gripper frame of the
/// pre-step orientation, rotation is composed on the right. Every delta is
/// clamped to limits * dt and the position to the workspace.
ArmState step(const ArmState& arm, const Vec7& cmd, double dt);

/// Jumps the end effector to `target`, clamped to the workspace.
ArmState follow_me(const ArmState& arm, const Pose& target);

/// Attaches a graspable object touched by both closing fingers, or releases
/// the held object when the fingers open. A released object is dropped onto
/// the support plane z = support_z.
ArmState grasp_check(const ArmState& arm, std::vector<SceneObject>& objects,
                     double support_z = 0.0);

/// Moves the held object (if any) rigidly with the end effector.
void sync_held_object(const ArmState& arm, std::vector<SceneObject>& objects);

/// True when both fingers of the current aperture touch the object.
bool fingers_contact(const ArmState& arm, const SceneObject& obj);

struct OrientedBox {
  Vec3 center;
  Rotation orientation;
  Vec3 half;
};

/// Separating-axis test for two oriented boxes (touching counts).
bool boxes_intersect(const OrientedBox& a, const OrientedBox& b);

SceneObject* find_object(std::vector<SceneObject>& objects, const std::string& id);
const SceneObject* find_object(std::span<const SceneObject> objects, const std::string& id);

}  // namespace admc
