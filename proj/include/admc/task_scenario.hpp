/**
 * @file task_scenario.hpp
 * @brief Pick-and-place testbed: one graspable block, one drop area on the
 *        table plane z = 0, success detection and seeded respawn.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "admc/arm_sim.hpp"
#include "admc/suggestion_engine.hpp"

namespace admc {

/// Rectangle on the table plane.
struct DropArea {
  double cx = 0.35;
  double cy = 0.15;
  double half_x = 0.075;
  double half_y = 0.075;

  bool contains_xy(const Vec3& p) const {
    return std::abs(p.x - cx) <= half_x && std::abs(p.y - cy) <= half_y;
  }
};

struct TaskConfig {
  double table_half_x = 0.6;
  double table_half_y = 0.4;
  DropArea drop_area;
  Vec3 arm_base{0.0, -0.4, 0.0};
  double base_margin = 0.2;       ///< no spawns closer than this to the base (XY)
  double edge_margin = 0.05;      ///< keep spawns this far inside the table edge
  double drop_clearance = 0.01;   ///< gap between a spawned block and the drop area
  double place_tolerance = 0.005; ///< vertical tolerance of a successful placement
  Vec3 block_half_extents{0.025, 0.025, 0.025};
  std::string block_id = "block";
};

struct Metrics {
  double completion_time = 0.0;  ///< seconds
  int mode_switches = 0;
  int suggestions_accepted = 0;
  int episodes_completed = 0;

  bool operator==(const Metrics&) const = default;
};

enum class Phase { Approach, Carry, Done };

std::string_view to_string(Phase phase);

/// Deterministic across platforms: uses only raw engine output.
class TaskRng {
 public:
  explicit TaskRng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

struct TaskState {
  TaskConfig config;
  Phase phase = Phase::Approach;
  Metrics episode;               ///< running metrics of the current episode
  std::vector<Metrics> history;  ///< one entry per completed episode
  std::uint64_t rng_seed = 0;
  TaskRng rng{0};
  std::int64_t episode_start_tick = 0;
};

/// Fresh task with its block spawned; the block object is returned alongside.
TaskState make_task(const TaskConfig& config, std::uint64_t seed, SceneObject& block_out);

SceneObject make_block(const TaskConfig& config, const Vec3& center);

/// Phase follows the grasp state: Carry iff the block is held.
void sync_phase(TaskState& task, const ArmState& arm);

struct CurrentTarget {
  Pose pose;
  TargetKind kind;
};

/// Pick the block while nothing is held; otherwise the end-effector pose that
/// sets the held block down centered on the drop area.
CurrentTarget current_target(const TaskState& task, const ArmState& arm,
                             std::span<const SceneObject> objects);

struct SuccessCheck {
  TaskState task;
  bool completed = false;
};

/// Completed when the block is released, its XY center is inside the drop
/// area and its base rests on the table within place_tolerance.
SuccessCheck check_success(const TaskState& task, const ArmState& arm,
                           std::span<const SceneObject> objects, std::int64_t tick,
                           double tick_rate);

/// Rolls the finished episode into history and places the block at a new
/// seeded random location outside the drop area and the base margin.
TaskState respawn(const TaskState& task, std::vector<SceneObject>& objects, std::int64_t next_tick);

Vec3 sample_spawn(const TaskConfig& config, TaskRng& rng);

/// One CSV row per completed episode.
void write_metrics_csv(std::ostream& os, const std::vector<Metrics>& history);

}  // namespace admc
