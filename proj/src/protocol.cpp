#include "admc/protocol.hpp"

#include "admc/error.hpp"

namespace admc {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kProtocol, "expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json cue_json(const ArrowCue& c) {
  json j = {{"visible", c.visible},
            {"anchor", vec_json(c.anchor)},
            {"translation", vec_json(c.translation)},
            {"rotation", vec_json(c.rotation)},
            {"gripper", c.gripper}};
  j["label"] = c.label ? json(std::string(to_string(*c.label))) : json(nullptr);
  return j;
}

json metrics_json(const Metrics& m) {
  return {{"completion_time", m.completion_time},
          {"mode_switches", m.mode_switches},
          {"suggestions_accepted", m.suggestions_accepted},
          {"episodes_completed", m.episodes_completed}};
}

json labels_json(const std::vector<SuggestionLabel>& labels) {
  json out = json::array();
  for (auto l : labels) out.push_back(std::string(to_string(l)));
  return out;
}

}  // namespace

json pose_json(const Pose& p) {
  const Rotation& q = p.orientation;
  return {{"position", vec_json(p.position)},
          {"orientation", json::array({q.w(), q.x(), q.y(), q.z()})}};
}

Pose pose_from_json(const json& j) {
  if (!j.is_object() || !j.contains("position") || !j.contains("orientation")) {
    throw Error(ErrorCode::kProtocol, "pose needs position and orientation");
  }
  const auto& o = j["orientation"];
  if (!o.is_array() || o.size() != 4) {
    throw Error(ErrorCode::kProtocol, "orientation must be [w, x, y, z]");
  }
  const Vec3 p = vec_from_json(j["position"]);
  const double w = o[0].get<double>(), x = o[1].get<double>(), y = o[2].get<double>(),
               z = o[3].get<double>();
  if (w * w + x * x + y * y + z * z == 0.0) throw Error(ErrorCode::kProtocol, "zero quaternion");
  return {p, Rotation::from_components(w, x, y, z), Frame::World};
}

std::string encode_input(const InputEvent& ev) {
  json e;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, AxisInput>) {
          e = {{"kind", "Axis"}, {"values", k.values}};
        } else if constexpr (std::is_same_v<T, ModeSwitchButton>) {
          e = {{"kind", "ModeSwitchButton"}};
        } else if constexpr (std::is_same_v<T, CycleSuggestion>) {
          e = {{"kind", "CycleSuggestion"}};
        } else if constexpr (std::is_same_v<T, AcceptSuggestion>) {
          e = {{"kind", "AcceptSuggestion"}};
        } else {
          e = {{"kind", "FollowMePose"}, {"pose", pose_json(k.pose)}};
        }
      },
      ev.kind);
  json j = {{"type", "input"}, {"client", ev.client_id}, {"client_tick", ev.client_tick},
            {"event", e}};
  return j.dump() + '\n';
}

InputEvent decode_input(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw Error(ErrorCode::kProtocol, "message is not valid JSON");
  }
  try {
    if (!j.is_object() || j.value("type", "") != "input" || !j.contains("event")) {
      throw Error(ErrorCode::kProtocol, "expected an input message");
    }
    InputEvent ev;
    ev.client_id = j.value("client", "");
    ev.client_tick = j.value("client_tick", std::int64_t{0});
    const auto& e = j["event"];
    const std::string kind = e.value("kind", "");
    if (kind == "Axis") {
      ev.kind = AxisInput{e.at("values").get<std::vector<double>>()};
    } else if (kind == "ModeSwitchButton") {
      ev.kind = ModeSwitchButton{};
    } else if (kind == "CycleSuggestion") {
      ev.kind = CycleSuggestion{};
    } else if (kind == "AcceptSuggestion") {
      ev.kind = AcceptSuggestion{};
    } else if (kind == "FollowMePose") {
      ev.kind = FollowMePose{pose_from_json(e.at("pose"))};
    } else {
      throw Error(ErrorCode::kProtocol, "unknown input kind '" + kind + "'");
    }
    return ev;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kProtocol, std::string("malformed input message: ") + ex.what());
  }
}

json state_json(const StateUpdate& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    json oj = pose_json(o.pose);
    oj["id"] = o.id;
    objects.push_back(oj);
  }
  json notes = json::array();
  for (const auto& n : s.notifications) {
    json channels = json::array();
    for (auto c : n.channels) channels.push_back(std::string(to_string(c)));
    notes.push_back({{"channels", channels}, {"tone_hz", n.tone_hz}, {"difference", n.difference}});
  }
  json history = json::array();
  for (const auto& m : s.history) history.push_back(metrics_json(m));
  json j = {
      {"type", "state"},
      {"tick", s.tick},
      {"time", s.time},
      {"scheme", std::string(to_string(s.scheme))},
      {"view", pose_json(s.view)},
      {"arm", pose_json(s.arm)},
      {"finger_aperture", s.finger_aperture},
      {"objects", objects},
      {"phase", std::string(to_string(s.phase))},
      {"drop_area",
       {{"center", json::array({s.drop_area.cx, s.drop_area.cy})},
        {"half_extents", json::array({s.drop_area.half_x, s.drop_area.half_y})}}},
      {"active", cue_json(s.active)},
      {"suggested", cue_json(s.suggested)},
      {"labels", labels_json(s.labels)},
      {"highlighted", s.highlighted},
      {"active_subset", s.active_subset},
      {"mode_index", s.mode_index},
      {"notifications", notes},
      {"metrics", metrics_json(s.episode)},
      {"history", history},
      {"episode_completed", s.episode_completed},
      {"bridge_connected", s.bridge_connected},
      {"external_joints", s.external_joints},
  };
  j["held"] = s.held ? json(*s.held) : json(nullptr);
  return j;
}

std::string encode_state(const StateUpdate& s) { return state_json(s).dump() + '\n'; }

std::string encode_hello(const SessionConfig& cfg, std::string_view mode) {
  json j = {{"type", "hello"},
            {"protocol", kSessionProtocolVersion},
            {"mode", std::string(mode)},
            {"tick_rate", cfg.tick_rate},
            {"scheme", std::string(to_string(cfg.scheme))},
            {"input_dofs", cfg.input_dofs}};
  return j.dump() + '\n';
}

std::string encode_error(std::string_view message) {
  return json{{"type", "error"}, {"message", std::string(message)}}.dump() + '\n';
}

std::string encode_frame(const FrameRecord& f, std::size_t index, std::size_t total) {
  json objects = json::array();
  for (const auto& o : f.objects) {
    json oj = pose_json(o.pose);
    oj["id"] = o.id;
    objects.push_back(oj);
  }
  json j = {{"type", "frame"},
            {"index", index},
            {"total", total},
            {"tick", f.tick},
            {"time", f.timestamp},
            {"view", pose_json(f.view)},
            {"arm", pose_json(f.arm)},
            {"finger_aperture", f.finger_aperture},
            {"active_subset", f.active_subset},
            {"labels", labels_json(f.labels)},
            {"objects", objects}};
  return j.dump() + '\n';
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.emplace_back(line);
    start = end + 1;
  }
  return out;
}

}  // namespace admc
