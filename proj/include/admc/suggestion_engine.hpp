/**
 * @file suggestion_engine.hpp
 * @brief Script-based rule engine producing the ranked movement suggestions
 *        (the columns of the mapping matrix) for a pick-and-place task.
 */

#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "admc/core_math.hpp"
#include "admc/dof_mapping.hpp"

namespace admc {

struct EngineParams {
  double minimal_hover_distance = 0.2;  ///< meters, XY-projected
  double hover_height = 0.15;           ///< meters above the current target
  double vel_trans = 0.004;             ///< meters per tick
  double vel_rot = 0.02;                ///< radians per tick
  double reach_radius = 0.05;           ///< meters
  double rotation_scale = 0.1;          ///< fraction of the remaining rotation per tick

  AxisScale scale() const { return {vel_trans, vel_rot}; }
  /// Throws Error(kInvalidConfig) unless every field is strictly positive and
  /// rotation_scale <= 1.
  void validate() const;
};

enum class TargetKind { PickObject, DropArea };

struct SceneSnapshot {
  Pose gripper_pose;
  double finger_aperture = 1.0;  ///< 0 closed, 1 fully open
  std::optional<std::string> held_object;
  Pose current_target_pose;
  TargetKind current_target_kind = TargetKind::PickObject;
  EngineParams params;
};

enum class SuggestionLabel { Optimal, Adjustment, Translation, Rotation, Gripper };

std::string_view to_string(SuggestionLabel label);
std::optional<SuggestionLabel> parse_label(std::string_view text);

struct Suggestion {
  SuggestionLabel label;
  AdaptiveAxis axis;
  Vec7 vec;  ///< axis normalized with the snapshot's AxisScale

  int combined_dofs() const { return vec.nonzero_count(); }
};

struct SuggestionSet {
  std::vector<Suggestion> items;

  /// Suggestions as matrix columns, padded with zero columns to 7.
  DofMatrix matrix() const;
  std::vector<SuggestionLabel> labels() const;
  const Suggestion* find(SuggestionLabel label) const;
};

/// Hover point above the target while XY-far, the target itself once near.
Vec3 compute_target_point(const SceneSnapshot& snap);

double gripper_component(const SceneSnapshot& snap);
AdaptiveAxis optimal_suggestion(const SceneSnapshot& snap);
AdaptiveAxis adjustment_suggestion(const AdaptiveAxis& optimal);
AdaptiveAxis translation_suggestion(const SceneSnapshot& snap);
AdaptiveAxis rotation_suggestion(const SceneSnapshot& snap);
AdaptiveAxis gripper_suggestion(const SceneSnapshot& snap);

/// All five suggestions ranked by combined DoF count, non-increasing; ties
/// keep the order Optimal, Adjustment, Translation, Rotation, Gripper.
SuggestionSet evaluate(const SceneSnapshot& snap);

/// Plug-in boundary: anything mapping a snapshot to a ranked suggestion set.
class RuleEngine {
 public:
  virtual ~RuleEngine() = default;
  virtual SuggestionSet evaluate(const SceneSnapshot& snap) = 0;
  virtual std::string_view name() const = 0;
};

class ScriptRuleEngine final : public RuleEngine {
 public:
  SuggestionSet evaluate(const SceneSnapshot& snap) override { return admc::evaluate(snap); }
  std::string_view name() const override { return "script"; }
};

/// Suggestions supplied from outside (a human operator or a remote model).
/// Falls back to the script engine until something has been injected.
class InjectedRuleEngine final : public RuleEngine {
 public:
  void inject(SuggestionSet set);
  void clear();
  SuggestionSet evaluate(const SceneSnapshot& snap) override;
  std::string_view name() const override { return "injected"; }

 private:
  std::mutex mutex_;
  std::optional<SuggestionSet> injected_;
};

std::unique_ptr<RuleEngine> make_rule_engine(std::string_view name);

}  // namespace admc
