#include "admc/session.hpp"

#include <algorithm>
#include <cmath>

#include "admc/error.hpp"

namespace admc {

std::string_view to_string(ControlScheme scheme) {
  switch (scheme) {
    case ControlScheme::Classic: return "Classic";
    case ControlScheme::AdmcContinuous: return "AdmcContinuous";
    case ControlScheme::AdmcThreshold: return "AdmcThreshold";
    case ControlScheme::FollowMe: return "FollowMe";
  }
  return "?";
}

std::optional<ControlScheme> parse_scheme(std::string_view text) {
  for (auto s : {ControlScheme::Classic, ControlScheme::AdmcContinuous,
                 ControlScheme::AdmcThreshold, ControlScheme::FollowMe}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

bool is_adaptive(ControlScheme scheme) {
  return scheme == ControlScheme::AdmcContinuous || scheme == ControlScheme::AdmcThreshold;
}

void SessionConfig::validate() const {
  if (!(tick_rate > 0.0) || !std::isfinite(tick_rate)) {
    throw Error(ErrorCode::kInvalidConfig, "tick_rate must be positive");
  }
  if (input_dofs < 1 || input_dofs > static_cast<int>(DofMatrix::kColumns)) {
    throw Error(ErrorCode::kInvalidConfig, "input_dofs must lie in [1, 7]");
  }
  if (is_adaptive(scheme) && input_dofs > 3) {
    // one suggestion axis plus the two padding columns
    throw Error(ErrorCode::kInvalidConfig, "adaptive schemes support at most 3 input DoFs");
  }
  limits.validate();
  attention.validate();
  EngineParams e = engine;
  e.vel_trans = limits.vel_trans / tick_rate;
  e.vel_rot = limits.vel_rot / tick_rate;
  e.validate();
  if (bridge) bridge->validate();
  if (session_name.empty() || session_name.find_first_of("/\\,\n") != std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "bad session name");
  }
  if (!(task.table_half_x > 0.0 && task.table_half_y > 0.0 && task.drop_area.half_x > 0.0 &&
        task.drop_area.half_y > 0.0 && task.place_tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "task dimensions must be positive");
  }
  make_rule_engine(rule_engine);
}

void validate_event(const InputEvent& ev, int input_dofs) {
  if (const auto* a = std::get_if<AxisInput>(&ev.kind)) {
    if (a->values.size() != static_cast<std::size_t>(input_dofs)) {
      throw Error(ErrorCode::kProtocol, "expected " + std::to_string(input_dofs) +
                                            " axis values, got " +
                                            std::to_string(a->values.size()));
    }
    for (double v : a->values) {
      if (!(v >= -1.0 && v <= 1.0)) throw Error(ErrorCode::kProtocol, "axis value outside [-1, 1]");
    }
  } else if (const auto* f = std::get_if<FollowMePose>(&ev.kind)) {
    const auto& p = f->pose.position;
    const auto& q = f->pose.orientation;
    for (double v : {p.x, p.y, p.z, q.w(), q.x(), q.y(), q.z()}) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kProtocol, "non-finite follow-me pose");
    }
  }
}

Pose default_view_pose() {
  return {{-0.45, -0.4, 0.55}, rotation_from_forward({0.8, 0.45, -0.55}), Frame::World};
}

std::vector<int> admc_subset(int first, std::size_t n) {
  std::vector<int> out{first};
  for (int pad : {5, 6}) {
    if (pad != first) out.push_back(pad);
  }
  out.resize(n, kNoColumn);
  return out;
}

std::vector<int> admc_idle_subset(std::size_t n) {
  std::vector<int> out{5, 6};
  out.resize(n, kNoColumn);
  return out;
}

namespace {

constexpr double kHomeHeight = 0.25;

ModeRing classic_ring(std::size_t n) {
  if (n == 2) return classic_control_config();
  ModeRing ring;
  for (std::size_t c = 0; c < DofMatrix::kColumns; c += n) {
    std::vector<int> mode;
    for (std::size_t i = 0; i < n; ++i) {
      mode.push_back(c + i < DofMatrix::kColumns ? static_cast<int>(c + i) : kNoColumn);
    }
    ring.push_back(std::move(mode));
  }
  return ring;
}

SceneSnapshot make_snapshot(const ArmState& arm, const TaskState& task,
                            const std::vector<SceneObject>& objects, const EngineParams& params) {
  const CurrentTarget target = current_target(task, arm, objects);
  SceneSnapshot snap;
  snap.gripper_pose = arm.end_effector;
  snap.finger_aperture = arm.finger_aperture;
  if (arm.held) snap.held_object = arm.held->id;
  snap.current_target_pose = target.pose;
  snap.current_target_kind = target.kind;
  snap.params = params;
  return snap;
}

}  // namespace

Session::Session(SessionConfig cfg, std::unique_ptr<BridgeTransport> transport,
                 std::unique_ptr<RuleEngine> engine)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), engine_(std::move(engine)) {
  cfg_.validate();
  if (cfg_.scheme == ControlScheme::AdmcContinuous) cfg_.attention.mode = AttentionMode::Continuous;
  if (cfg_.scheme == ControlScheme::AdmcThreshold) cfg_.attention.mode = AttentionMode::Threshold;
  if (!engine_) engine_ = make_rule_engine(cfg_.rule_engine);

  arm_.end_effector = {{cfg_.task.arm_base.x, cfg_.task.arm_base.y + 0.2, kHomeHeight},
                       Rotation::identity(), Frame::World};
  arm_.limits = cfg_.limits;
  if (cfg_.bridge) {
    arm_ = attach_bridge(arm_, *cfg_.bridge);
    sync_every_ = std::max<std::int64_t>(1, std::llround(cfg_.bridge->sync_period * cfg_.tick_rate));
  }
  update_engine_scale();

  SceneObject block;
  task_ = make_task(cfg_.task, cfg_.seed, block);
  objects_.push_back(std::move(block));

  const auto n = static_cast<std::size_t>(cfg_.input_dofs);
  ring_ = classic_ring(n);
  axes_.assign(n, 0.0);
  switch (cfg_.scheme) {
    case ControlScheme::Classic:
      control_ = select_subset(identity_matrix(), ring_.front(), n);
      break;
    case ControlScheme::FollowMe: {
      // input axis 0 opens and closes the gripper while the pose is tracked
      std::vector<int> idx(n, kNoColumn);
      idx[0] = 6;
      control_ = select_subset(identity_matrix(), idx, n);
      break;
    }
    default:
      control_ = select_subset(DofMatrix{}, admc_idle_subset(n), n);
      break;
  }
  evaluate_suggestions();

  if (!cfg_.recording_dir.empty()) recorder_ = std::make_unique<AsyncRecorder>();
}

Session::~Session() {
  try {
    finish();
  } catch (...) {
  }
}

void Session::update_engine_scale() {
  cfg_.engine.vel_trans = arm_.limits.vel_trans / cfg_.tick_rate;
  cfg_.engine.vel_rot = arm_.limits.vel_rot / cfg_.tick_rate;
}

void Session::submit(InputEvent ev) {
  validate_event(ev, cfg_.input_dofs);
  std::lock_guard lock(inbox_mutex_);
  inbox_.push_back(std::move(ev));
}

std::filesystem::path Session::recording_path(int episode) const {
  return cfg_.recording_dir / (cfg_.session_name + "_" + std::to_string(episode) + ".csv");
}

RecordingHeader Session::make_header() const {
  RecordingHeader h;
  h.tick_rate = cfg_.tick_rate;
  h.set("session", cfg_.session_name);
  h.set("episode", std::to_string(task_.history.size()));
  h.set("scheme", std::string(to_string(cfg_.scheme)));
  h.set("seed", std::to_string(cfg_.seed));
  h.set("initial_subset", format_index_list(control_.active_subset));
  h.registry.push_back({kViewId, "camera", {1.0, 1.0, 1.0}, {}});
  const auto& g = arm_.geometry;
  h.registry.push_back({kArmId, "gripper", {g.finger_depth, g.max_span, g.finger_height}, {}});
  for (const auto& o : objects_) {
    if (o.movable) h.registry.push_back(registry_entry(o));
  }
  return h;
}

void Session::handle(const InputEvent& ev) {
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, AxisInput>) {
          axes_ = e.values;
        } else if constexpr (std::is_same_v<T, ModeSwitchButton>) {
          if (cfg_.scheme != ControlScheme::Classic) return;
          const int pos = ring_position(ring_, control_.active_subset);
          const auto next = static_cast<std::size_t>(pos + 1) % ring_.size();
          control_ = mode_switch(control_, ring_[next]);
        } else if constexpr (std::is_same_v<T, CycleSuggestion>) {
          if (!is_adaptive(cfg_.scheme) || suggestions_.items.empty()) return;
          highlighted_ = (highlighted_ + 1) % static_cast<int>(suggestions_.items.size());
        } else if constexpr (std::is_same_v<T, AcceptSuggestion>) {
          if (is_adaptive(cfg_.scheme)) accept_highlighted();
        } else if constexpr (std::is_same_v<T, FollowMePose>) {
          follow_target_ = e.pose;
        }
      },
      ev.kind);
}

void Session::accept_highlighted() {
  if (suggestions_.items.empty()) return;
  const int before = control_.mode_switch_count;
  control_ = mode_switch(control_, admc_subset(highlighted_, control_.input_dofs()));
  if (control_.mode_switch_count != before) ++accepted_total_;
  highlighted_ = 0;
}

void Session::sync_bridge() {
  if (!cfg_.bridge || cfg_.bridge->role == BridgeRole::None || !transport_) return;
  for (auto& msg : transport_->poll()) {
    if (const auto* l = std::get_if<LimitsMsg>(&msg)) {
      if (cfg_.bridge->role == BridgeRole::PhysicalTwin) {
        cfg_.bridge->external_limits = l->limits;
        arm_.limits = l->limits;
        update_engine_scale();
      }
    } else if (auto* p = std::get_if<PoseMsg>(&msg)) {
      external_ = std::move(p->state);
    }
  }
  if (!transport_->connected()) return;
  const SyncResult res = sync_tick(*cfg_.bridge, arm_, external_);
  if (res.command) transport_->send(CmdMsg{*res.command});
  if (res.sim) arm_ = *res.sim;
}

void Session::evaluate_suggestions() {
  suggestions_ = engine_->evaluate(make_snapshot(arm_, task_, objects_, cfg_.engine));
  if (is_adaptive(cfg_.scheme)) control_ = refresh_matrix(control_, suggestions_.matrix());
  const int count = static_cast<int>(suggestions_.items.size());
  if (highlighted_ >= count) highlighted_ = 0;
}

ArrowCue Session::cue(const Vec7& v, std::optional<SuggestionLabel> label) const {
  ArrowCue c;
  const Rotation& r = arm_.end_effector.orientation;
  c.visible = !v.is_zero();
  c.anchor = arm_.end_effector.position;
  c.translation = r.apply({v[0], v[1], v[2]});
  c.rotation = r.apply({v[3], v[4], v[5]});
  c.gripper = v[6];
  c.label = label;
  return c;
}

StateUpdate Session::snapshot_state() const {
  StateUpdate s;
  s.tick = tick_;
  s.time = static_cast<double>(tick_) / cfg_.tick_rate;
  s.scheme = cfg_.scheme;
  s.view = default_view_pose();
  s.arm = arm_.end_effector;
  s.finger_aperture = arm_.finger_aperture;
  if (arm_.held) s.held = arm_.held->id;
  for (const auto& o : objects_) s.objects.push_back({o.id, o.pose});
  s.phase = task_.phase;
  s.drop_area = task_.config.drop_area;
  s.labels = suggestions_.labels();
  s.highlighted = highlighted_;
  s.active_subset = control_.active_subset;
  if (cfg_.scheme == ControlScheme::Classic) {
    s.mode_index = ring_position(ring_, control_.active_subset);
  }
  std::optional<SuggestionLabel> active_label;
  const int c0 = control_.active_subset.empty() ? kNoColumn : control_.active_subset[0];
  if (is_adaptive(cfg_.scheme) && c0 >= 0 && c0 < static_cast<int>(suggestions_.items.size())) {
    active_label = suggestions_.items[static_cast<std::size_t>(c0)].label;
  }
  s.active = cue(control_.active_subset.empty() ? Vec7{} : control_.bound_column(0), active_label);
  if (is_adaptive(cfg_.scheme) && !suggestions_.items.empty()) {
    const auto& h = suggestions_.items[static_cast<std::size_t>(highlighted_)];
    s.suggested = cue(h.vec, h.label);
    // Threshold mode reveals the suggestion only between a notification and
    // the moment the two axes agree again
    if (cfg_.attention.mode == AttentionMode::Threshold && attention_.armed) {
      s.suggested.visible = false;
    }
  }
  s.episode = task_.episode;
  s.history = task_.history;
  s.bridge_connected = transport_ && transport_->connected();
  if (external_) s.external_joints = external_->joint_angles;
  return s;
}

std::optional<Notification> Session::run_attention() {
  if (!is_adaptive(cfg_.scheme) || control_.active_subset.empty()) return std::nullopt;
  const Vec7 top = suggestions_.items.empty() ? Vec7{} : suggestions_.items.front().vec;
  AttentionUpdate u = update(attention_, control_.bound_column(0), top, cfg_.attention);
  attention_ = u.state;
  return u.event;
}

FrameRecord Session::frame() const {
  FrameRecord f;
  f.tick = tick_;
  f.timestamp = static_cast<double>(tick_) / cfg_.tick_rate;
  f.view = default_view_pose();
  f.arm = arm_.end_effector;
  f.finger_aperture = arm_.finger_aperture;
  f.active_subset = control_.active_subset;
  f.labels = suggestions_.labels();
  for (const auto& o : objects_) {
    if (o.movable) f.objects.push_back({o.id, o.pose});
  }
  return f;
}

StateUpdate Session::tick() {
  if (recorder_ && !recording_open_) {
    const auto path = recording_path(static_cast<int>(task_.history.size()));
    recorder_->open(path, make_header());
    recordings_.push_back(path);
    recording_open_ = true;
  }

  std::vector<InputEvent> events;
  {
    std::lock_guard lock(inbox_mutex_);
    events.swap(inbox_);
  }
  for (const auto& ev : events) handle(ev);

  const double dt = 1.0 / cfg_.tick_rate;
  const bool external_drives =
      cfg_.bridge && cfg_.bridge->role == BridgeRole::DigitalTwin && transport_;
  if (!external_drives) {
    if (cfg_.scheme == ControlScheme::FollowMe && follow_target_) {
      arm_ = follow_me(arm_, *follow_target_);
    }
    arm_ = step(arm_, apply_input(control_, axes_), dt);
  }
  if (cfg_.bridge && tick_ % sync_every_ == 0) sync_bridge();

  arm_ = grasp_check(arm_, objects_);
  sync_held_object(arm_, objects_);
  sync_phase(task_, arm_);

  task_.episode.mode_switches = control_.mode_switch_count - switches_at_start_;
  task_.episode.suggestions_accepted = accepted_total_ - accepted_at_start_;
  const SuccessCheck sc = check_success(task_, arm_, objects_, tick_, cfg_.tick_rate);
  task_ = sc.task;

  evaluate_suggestions();
  const auto notification = run_attention();
  StateUpdate out = snapshot_state();
  if (notification) out.notifications.push_back(*notification);

  if (recorder_) recorder_->push(frame());

  if (sc.completed) {
    out.episode_completed = true;
    out.episode = task_.episode;
    if (recorder_) {
      recorder_->close();
      recording_open_ = false;
    }
    switches_at_start_ = control_.mode_switch_count;
    accepted_at_start_ = accepted_total_;
    task_ = respawn(task_, objects_, tick_ + 1);
    evaluate_suggestions();
  }
  ++tick_;
  return out;
}

void Session::finish() {
  if (!recorder_) return;
  if (recording_open_) {
    recorder_->close();
    recording_open_ = false;
  }
  recorder_->flush();
}

std::string_view to_string(AgentKind kind) {
  return kind == AgentKind::GreedyAdmc ? "GreedyAdmc" : "ClassicOracle";
}

std::optional<AgentKind> parse_agent(std::string_view text) {
  if (text == "GreedyAdmc") return AgentKind::GreedyAdmc;
  if (text == "ClassicOracle") return AgentKind::ClassicOracle;
  return std::nullopt;
}

namespace {

constexpr double kOracleTolerance = 1e-4;

InputEvent agent_event(InputKind kind) { return {std::move(kind), "agent", 0}; }

std::vector<InputEvent> greedy_inputs(const Session& s) {
  std::vector<InputEvent> out;
  const auto n = s.control().input_dofs();
  const int count = static_cast<int>(s.suggestions().items.size());
  if (count > 0 && s.control().active_subset[0] != 0) {
    for (int h = s.highlighted(); h != 0; h = (h + 1) % count) out.push_back(agent_event(CycleSuggestion{}));
    out.push_back(agent_event(AcceptSuggestion{}));
  }
  std::vector<double> u(n, 0.0);
  u[0] = 1.0;
  out.push_back(agent_event(AxisInput{u}));
  return out;
}

std::vector<InputEvent> classic_inputs(const Session& s) {
  const ArmState& arm = s.arm();
  const auto n = s.control().input_dofs();
  const TaskState& task = s.task();
  const CurrentTarget target = current_target(task, arm, s.objects());
  const Vec3 err = to_gripper_frame(target.pose.position - arm.end_effector.position,
                                    arm.end_effector.orientation);
  const double step = arm.limits.vel_trans / s.config().tick_rate;
  const bool held = arm.held.has_value();
  const bool at_xy = std::hypot(err.x, err.y) < kOracleTolerance;
  const bool at_z = std::abs(err.z) < kOracleTolerance;

  // Needed ring mode plus the two axis values for it.
  int mode = 0;
  double u0 = 0.0;
  double u1 = 0.0;
  const int current = ring_position(s.ring(), s.control().active_subset);
  constexpr int kGripperMode = 3;
  if (!held && (!at_xy || !at_z) && current == kGripperMode && arm.finger_aperture < 1.0) {
    mode = kGripperMode;
    u0 = -1.0;  // finish opening before moving on
  } else if (!at_xy) {
    mode = 0;
    u0 = err.x / step;
    u1 = err.y / step;
    const double norm = std::hypot(u0, u1);
    if (norm > 1.0) {
      u0 /= norm;
      u1 /= norm;
    }
  } else if (!at_z) {
    mode = 1;
    u0 = std::clamp(err.z / step, -1.0, 1.0);
  } else {
    mode = kGripperMode;
    u0 = held ? -1.0 : 1.0;
  }

  std::vector<InputEvent> out;
  std::vector<double> u(n, 0.0);
  if (current >= 0 && current != mode) {
    // one press per tick, holding still; a frame then shows every step of the ring
    out.push_back(agent_event(ModeSwitchButton{}));
  } else {
    u[0] = u0;
    if (n > 1) u[1] = u1;
  }
  out.push_back(agent_event(AxisInput{u}));
  return out;
}

}  // namespace

std::vector<InputEvent> agent_inputs(AgentKind kind, const Session& session) {
  return kind == AgentKind::GreedyAdmc ? greedy_inputs(session) : classic_inputs(session);
}

AgentRun run_agent(SessionConfig cfg, AgentKind kind, int episodes, double max_episode_seconds) {
  if (kind == AgentKind::ClassicOracle) {
    cfg.scheme = ControlScheme::Classic;
    if (cfg.input_dofs != 2) {
      throw Error(ErrorCode::kInvalidConfig, "the classic oracle plans for two input DoFs");
    }
  } else if (!is_adaptive(cfg.scheme)) {
    cfg.scheme = ControlScheme::AdmcThreshold;
  }
  Session session(cfg);
  const auto max_ticks =
      static_cast<std::int64_t>(std::ceil(max_episode_seconds * cfg.tick_rate));
  AgentRun run;
  std::int64_t episode_ticks = 0;
  while (static_cast<int>(run.episodes.size()) < episodes) {
    for (auto& ev : agent_inputs(kind, session)) session.submit(std::move(ev));
    const StateUpdate u = session.tick();
    ++run.ticks;
    ++episode_ticks;
    if (u.episode_completed) {
      run.episodes.push_back(u.episode);
      episode_ticks = 0;
    } else if (episode_ticks >= max_ticks) {
      break;
    }
  }
  session.finish();
  run.all_completed = static_cast<int>(run.episodes.size()) == episodes;
  return run;
}

}  // namespace admc
