#include "admc/suggestion_engine.hpp"

#include <algorithm>
#include <array>

#include "admc/error.hpp"

namespace admc {
namespace {

constexpr double kDegenerateDistance = 1e-6;

// Step of at most vel_trans towards `goal`, expressed in the gripper frame.
// Capped at the remaining distance so the gripper lands on the goal instead
// of oscillating around it.
Vec3 step_towards(const SceneSnapshot& snap, const Vec3& goal) {
  const Vec3 delta = goal - snap.gripper_pose.position;
  const double dist = delta.norm();
  if (dist < kDegenerateDistance) return {};
  const double len = std::min(snap.params.vel_trans, dist);
  return to_gripper_frame(delta / dist, snap.gripper_pose.orientation) * len;
}

// Fraction of the rotation that would point the gripper's forward axis at
// `goal`, built with zero roll in the world frame.
Rotation turn_towards(const SceneSnapshot& snap, const Vec3& goal) {
  const Vec3 delta = goal - snap.gripper_pose.position;
  if (delta.norm() < kDegenerateDistance) return Rotation::identity();
  const Rotation target = rotation_from_forward(delta);
  const Rotation full = snap.gripper_pose.orientation.inverse() * target;
  return full.scaled(snap.params.rotation_scale);
}

Suggestion make(SuggestionLabel label, const AdaptiveAxis& axis, const AxisScale& scale) {
  return {label, axis, as_vec7(axis, scale)};
}

}  // namespace

void EngineParams::validate() const {
  const std::array<double, 6> fields{minimal_hover_distance, hover_height, vel_trans,
                                     vel_rot, reach_radius, rotation_scale};
  for (double f : fields) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw Error(ErrorCode::kInvalidConfig, "engine parameters must be strictly positive");
    }
  }
  if (rotation_scale > 1.0) {
    throw Error(ErrorCode::kInvalidConfig, "rotation_scale must be <= 1");
  }
}

std::string_view to_string(SuggestionLabel label) {
  switch (label) {
    case SuggestionLabel::Optimal: return "Optimal";
    case SuggestionLabel::Adjustment: return "Adjustment";
    case SuggestionLabel::Translation: return "Translation";
    case SuggestionLabel::Rotation: return "Rotation";
    case SuggestionLabel::Gripper: return "Gripper";
  }
  return "?";
}

std::optional<SuggestionLabel> parse_label(std::string_view text) {
  for (auto l : {SuggestionLabel::Optimal, SuggestionLabel::Adjustment,
                 SuggestionLabel::Translation, SuggestionLabel::Rotation,
                 SuggestionLabel::Gripper}) {
    if (to_string(l) == text) return l;
  }
  return std::nullopt;
}

DofMatrix SuggestionSet::matrix() const {
  std::array<Vec7, DofMatrix::kColumns> cols{};
  for (std::size_t i = 0; i < items.size() && i < cols.size(); ++i) cols[i] = items[i].vec;
  return DofMatrix(cols);
}

std::vector<SuggestionLabel> SuggestionSet::labels() const {
  std::vector<SuggestionLabel> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.label);
  return out;
}

const Suggestion* SuggestionSet::find(SuggestionLabel label) const {
  auto it = std::ranges::find(items, label, &Suggestion::label);
  return it == items.end() ? nullptr : &*it;
}

Vec3 compute_target_point(const SceneSnapshot& snap) {
  const Vec3& target = snap.current_target_pose.position;
  const Vec3& gripper = snap.gripper_pose.position;
  const double xy = std::hypot(target.x - gripper.x, target.y - gripper.y);
  if (xy >= snap.params.minimal_hover_distance) {
    return target + Vec3{0.0, 0.0, snap.params.hover_height};
  }
  return target;
}

double gripper_component(const SceneSnapshot& snap) {
  const double dist = (compute_target_point(snap) - snap.gripper_pose.position).norm();
  const bool holding = snap.held_object.has_value();
  if (dist <= snap.params.reach_radius) {
    if (holding) return -1.0;
    // fingers closed on nothing: open again so the next close can grasp
    return snap.finger_aperture <= 0.0 ? -1.0 : 1.0;
  }
  // out of reach: pre-open empty fingers for the next grasp
  if (!holding && snap.finger_aperture < 1.0) return -1.0;
  return 0.0;
}

AdaptiveAxis optimal_suggestion(const SceneSnapshot& snap) {
  const Vec3 point = compute_target_point(snap);
  return {step_towards(snap, point), turn_towards(snap, point), gripper_component(snap)};
}

AdaptiveAxis adjustment_suggestion(const AdaptiveAxis& optimal) {
  const Vec3& t = optimal.translation;
  // Quarter turn of t about the part of the gripper Y axis orthogonal to t.
  // For t in the gripper XZ plane this is exactly a +90 deg turn about Y.
  const Vec3 turned = Vec3{0.0, 1.0, 0.0}.cross(t);  // (t.z, 0, -t.x)
  const double n = turned.norm();
  AdaptiveAxis out;
  out.translation = n > 1e-12 * std::max(1.0, t.norm())
                        ? turned * (t.norm() / n)
                        : Rotation::pitch(kPi / 2).apply(t);
  out.rotation = optimal.rotation;
  out.gripper = 0.0;
  return out;
}

AdaptiveAxis translation_suggestion(const SceneSnapshot& snap) {
  return {step_towards(snap, snap.current_target_pose.position), Rotation::identity(), 0.0};
}

AdaptiveAxis rotation_suggestion(const SceneSnapshot& snap) {
  return {Vec3{}, turn_towards(snap, snap.current_target_pose.position), 0.0};
}

AdaptiveAxis gripper_suggestion(const SceneSnapshot& snap) {
  return {Vec3{}, Rotation::identity(), snap.held_object ? -1.0 : 1.0};
}

SuggestionSet evaluate(const SceneSnapshot& snap) {
  const AxisScale scale = snap.params.scale();
  const AdaptiveAxis optimal = optimal_suggestion(snap);
  SuggestionSet set;
  set.items = {
      make(SuggestionLabel::Optimal, optimal, scale),
      make(SuggestionLabel::Adjustment, adjustment_suggestion(optimal), scale),
      make(SuggestionLabel::Translation, translation_suggestion(snap), scale),
      make(SuggestionLabel::Rotation, rotation_suggestion(snap), scale),
      make(SuggestionLabel::Gripper, gripper_suggestion(snap), scale),
  };
  std::ranges::stable_sort(set.items, std::greater<>{}, &Suggestion::combined_dofs);
  return set;
}

void InjectedRuleEngine::inject(SuggestionSet set) {
  std::lock_guard lock(mutex_);
  injected_ = std::move(set);
}

void InjectedRuleEngine::clear() {
  std::lock_guard lock(mutex_);
  injected_.reset();
}

SuggestionSet InjectedRuleEngine::evaluate(const SceneSnapshot& snap) {
  std::lock_guard lock(mutex_);
  if (injected_) return *injected_;
  return admc::evaluate(snap);
}

std::unique_ptr<RuleEngine> make_rule_engine(std::string_view name) {
  if (name == "script") return std::make_unique<ScriptRuleEngine>();
  if (name == "injected") return std::make_unique<InjectedRuleEngine>();
  throw Error(ErrorCode::kInvalidConfig, "unknown rule engine: " + std::string(name));
}

}  // namespace admc
