/**
 * @file session.hpp
 * @brief The fixed-rate tick loop tying control, simulation, suggestions,
 *        attention, recording and the twin bridge together, plus the scripted
 *        agents used for benchmarks.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "admc/arm_sim.hpp"
#include "admc/attention.hpp"
#include "admc/dof_mapping.hpp"
#include "admc/record_replay.hpp"
#include "admc/suggestion_engine.hpp"
#include "admc/task_scenario.hpp"
#include "admc/twin_bridge.hpp"

namespace admc {

enum class ControlScheme { Classic, AdmcContinuous, AdmcThreshold, FollowMe };

std::string_view to_string(ControlScheme scheme);
std::optional<ControlScheme> parse_scheme(std::string_view text);
bool is_adaptive(ControlScheme scheme);

struct SessionConfig {
  double tick_rate = 50.0;
  ControlScheme scheme = ControlScheme::AdmcThreshold;
  int input_dofs = 2;
  /// vel_trans and vel_rot are derived from `limits` and `tick_rate`.
  EngineParams engine;
  AttentionConfig attention;
  VelocityLimits limits;
  TaskConfig task;
  std::optional<BridgeConfig> bridge;
  std::string rule_engine = "script";
  /// Directory for `<session>_<episode>.csv` files; empty disables recording.
  std::filesystem::path recording_dir;
  std::string session_name = "session";
  std::uint64_t seed = 42;

  /// Throws Error(kInvalidConfig).
  void validate() const;
};

struct AxisInput {
  std::vector<double> values;
};
struct ModeSwitchButton {};
struct CycleSuggestion {};
struct AcceptSuggestion {};
struct FollowMePose {
  Pose pose;
};

using InputKind =
    std::variant<AxisInput, ModeSwitchButton, CycleSuggestion, AcceptSuggestion, FollowMePose>;

struct InputEvent {
  InputKind kind;
  std::string client_id;
  std::int64_t client_tick = 0;
};

/// Throws Error(kProtocol) for axis values outside [-1, 1], a wrong axis
/// count or a non-finite pose.
void validate_event(const InputEvent& ev, int input_dofs);

/// A mapping drawn as an arrow at the gripper, in world coordinates.
struct ArrowCue {
  bool visible = false;
  Vec3 anchor;
  Vec3 translation;  ///< world direction scaled to the normalized magnitude
  Vec3 rotation;     ///< world rotation axis scaled likewise
  double gripper = 0.0;
  std::optional<SuggestionLabel> label;
};

struct StateUpdate {
  std::int64_t tick = 0;
  double time = 0.0;
  ControlScheme scheme = ControlScheme::AdmcThreshold;
  Pose view;
  Pose arm;
  double finger_aperture = 1.0;
  std::optional<std::string> held;
  std::vector<ObjectPose> objects;
  Phase phase = Phase::Approach;
  DropArea drop_area;
  ArrowCue active;
  ArrowCue suggested;
  std::vector<SuggestionLabel> labels;
  int highlighted = 0;
  std::vector<int> active_subset;
  int mode_index = -1;  ///< ring position in the Classic scheme
  std::vector<Notification> notifications;
  Metrics episode;
  std::vector<Metrics> history;
  bool episode_completed = false;
  bool bridge_connected = false;
  std::vector<double> external_joints;
};

/// Fixed camera looking at the table from behind the arm base.
Pose default_view_pose();

/// [first, 5, 6, none, ...] truncated to n slots: the first input drives
/// column `first`, the rest bind the matrix's padding columns.
std::vector<int> admc_subset(int first, std::size_t n);
/// Subset before anything was accepted: only padding (zero) columns.
std::vector<int> admc_idle_subset(std::size_t n);

class Session {
 public:
  explicit Session(SessionConfig cfg, std::unique_ptr<BridgeTransport> transport = nullptr,
                   std::unique_ptr<RuleEngine> engine = nullptr);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Thread-safe; invalid events are rejected with Error(kProtocol).
  void submit(InputEvent ev);
  /// Runs exactly one tick.
  StateUpdate tick();
  /// Flushes and closes the current recording file.
  void finish();

  const SessionConfig& config() const { return cfg_; }
  std::int64_t tick_index() const { return tick_; }
  const ArmState& arm() const { return arm_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  const TaskState& task() const { return task_; }
  const ControlState& control() const { return control_; }
  const SuggestionSet& suggestions() const { return suggestions_; }
  int highlighted() const { return highlighted_; }
  const ModeRing& ring() const { return ring_; }
  /// Completed episodes so far.
  const std::vector<Metrics>& history() const { return task_.history; }
  const std::vector<std::filesystem::path>& recordings() const { return recordings_; }
  std::filesystem::path recording_path(int episode) const;
  RecordingHeader make_header() const;
  StateUpdate snapshot_state() const;

 private:
  void handle(const InputEvent& ev);
  void accept_highlighted();
  void sync_bridge();
  void evaluate_suggestions();
  std::optional<Notification> run_attention();
  FrameRecord frame() const;
  ArrowCue cue(const Vec7& v, std::optional<SuggestionLabel> label) const;
  void update_engine_scale();

  SessionConfig cfg_;
  std::unique_ptr<BridgeTransport> transport_;
  std::unique_ptr<RuleEngine> engine_;
  std::unique_ptr<AsyncRecorder> recorder_;

  std::mutex inbox_mutex_;
  std::vector<InputEvent> inbox_;

  std::int64_t tick_ = 0;
  ArmState arm_;
  std::vector<SceneObject> objects_;
  TaskState task_;
  ControlState control_;
  ModeRing ring_;
  SuggestionSet suggestions_;
  std::vector<double> axes_;
  int highlighted_ = 0;
  std::optional<Pose> follow_target_;
  AttentionState attention_;
  int switches_at_start_ = 0;
  int accepted_total_ = 0;
  int accepted_at_start_ = 0;
  bool recording_open_ = false;
  std::vector<std::filesystem::path> recordings_;
  std::optional<ExternalState> external_;
  std::int64_t sync_every_ = 0;
};

enum class AgentKind { GreedyAdmc, ClassicOracle };

std::string_view to_string(AgentKind kind);
std::optional<AgentKind> parse_agent(std::string_view text);

/// Inputs the agent issues for the coming tick, given the session state.
std::vector<InputEvent> agent_inputs(AgentKind kind, const Session& session);

struct AgentRun {
  std::vector<Metrics> episodes;
  bool all_completed = false;
  std::int64_t ticks = 0;
};

/// Runs `episodes` episodes headless. Classic uses the Classic scheme; the
/// greedy agent keeps an adaptive scheme (AdmcThreshold unless one is set).
/// An episode that exceeds max_episode_seconds ends the run.
AgentRun run_agent(SessionConfig cfg, AgentKind kind, int episodes,
                   double max_episode_seconds = 60.0);

}  // namespace admc
