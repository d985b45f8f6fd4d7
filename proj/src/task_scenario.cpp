#include "admc/task_scenario.hpp"

#include <ostream>

#include "admc/csv_number.hpp"

namespace admc {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Approach: return "Approach";
    case Phase::Carry: return "Carry";
    case Phase::Done: return "Done";
  }
  return "?";
}

double TaskRng::uniform(double lo, double hi) {
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

SceneObject make_block(const TaskConfig& config, const Vec3& center) {
  SceneObject block;
  block.id = config.block_id;
  block.mesh = "cube_blue";
  block.pose = {center, Rotation::identity(), Frame::World};
  block.half_extents = config.block_half_extents;
  block.tags = {kGraspableTag};
  block.movable = true;
  return block;
}

Vec3 sample_spawn(const TaskConfig& config, TaskRng& rng) {
  const double bx = config.block_half_extents.x;
  const double by = config.block_half_extents.y;
  const auto& d = config.drop_area;
  for (;;) {
    const double x = rng.uniform(-config.table_half_x + config.edge_margin,
                                 config.table_half_x - config.edge_margin);
    const double y = rng.uniform(-config.table_half_y + config.edge_margin,
                                 config.table_half_y - config.edge_margin);
    const bool on_drop = std::abs(x - d.cx) < d.half_x + bx + config.drop_clearance &&
                         std::abs(y - d.cy) < d.half_y + by + config.drop_clearance;
    const bool near_base =
        std::hypot(x - config.arm_base.x, y - config.arm_base.y) < config.base_margin;
    if (!on_drop && !near_base) return {x, y, config.block_half_extents.z};
  }
}

TaskState make_task(const TaskConfig& config, std::uint64_t seed, SceneObject& block_out) {
  TaskState task;
  task.config = config;
  task.rng_seed = seed;
  task.rng = TaskRng(seed);
  block_out = make_block(config, sample_spawn(config, task.rng));
  return task;
}

void sync_phase(TaskState& task, const ArmState& arm) {
  if (task.phase == Phase::Done) return;
  task.phase = (arm.held && arm.held->id == task.config.block_id) ? Phase::Carry : Phase::Approach;
}

CurrentTarget current_target(const TaskState& task, const ArmState& arm,
                             std::span<const SceneObject> objects) {
  const SceneObject* block = find_object(objects, task.config.block_id);
  if (!block) return {arm.end_effector, TargetKind::PickObject};
  if (!arm.held || arm.held->id != block->id) {
    return {block->pose, TargetKind::PickObject};
  }
  const auto& d = task.config.drop_area;
  const double rest_z = block->pose.position.z - block->base_height();
  const Vec3 resting{d.cx, d.cy, rest_z};
  const Vec3 offset = block->pose.position - arm.end_effector.position;
  return {{resting - offset, arm.end_effector.orientation, Frame::World}, TargetKind::DropArea};
}

SuccessCheck check_success(const TaskState& task, const ArmState& arm,
                           std::span<const SceneObject> objects, std::int64_t tick,
                           double tick_rate) {
  SuccessCheck out{task, false};
  const SceneObject* block = find_object(objects, task.config.block_id);
  if (!block || task.phase == Phase::Done) return out;
  const bool held = arm.held && arm.held->id == block->id;
  if (held) return out;
  if (!task.config.drop_area.contains_xy(block->pose.position)) return out;
  if (std::abs(block->base_height()) > task.config.place_tolerance) return out;

  out.completed = true;
  out.task.phase = Phase::Done;
  out.task.episode.completion_time =
      static_cast<double>(tick - task.episode_start_tick + 1) / tick_rate;
  out.task.episode.episodes_completed = task.episode.episodes_completed + 1;
  return out;
}

TaskState respawn(const TaskState& task, std::vector<SceneObject>& objects, std::int64_t next_tick) {
  TaskState next = task;
  next.history.push_back(task.episode);
  const int completed = task.episode.episodes_completed;
  next.episode = Metrics{};
  next.episode.episodes_completed = completed;
  next.episode_start_tick = next_tick;
  next.phase = Phase::Approach;
  const Vec3 spawn = sample_spawn(next.config, next.rng);
  if (SceneObject* block = find_object(objects, next.config.block_id)) {
    block->pose = {spawn, Rotation::identity(), Frame::World};
  } else {
    objects.push_back(make_block(next.config, spawn));
  }
  return next;
}

void write_metrics_csv(std::ostream& os, const std::vector<Metrics>& history) {
  os << "episode,completion_time,mode_switches,suggestions_accepted,episodes_completed\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const Metrics& m = history[i];
    os << i << ',' << format_double(m.completion_time) << ',' << m.mode_switches << ','
       << m.suggestions_accepted << ',' << m.episodes_completed << '\n';
  }
}

}  // namespace admc
