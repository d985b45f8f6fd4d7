#include "admc/config.hpp"

#include <fstream>
#include <set>

#include "admc/error.hpp"

namespace admc {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) bad("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad("wrong type for '" + std::string(key) + "' in " + where);
  }
}

void read_limits(const json& j, VelocityLimits& l, const std::string& where) {
  check_keys(j, where, {"vel_trans", "vel_rot", "vel_fingers"});
  read(j, "vel_trans", l.vel_trans, where);
  read(j, "vel_rot", l.vel_rot, where);
  read(j, "vel_fingers", l.vel_fingers, where);
}

json limits_json(const VelocityLimits& l) {
  return {{"vel_trans", l.vel_trans}, {"vel_rot", l.vel_rot}, {"vel_fingers", l.vel_fingers}};
}

Channel parse_channel(const std::string& s) {
  for (auto c : {Channel::Visual, Channel::Audio, Channel::Haptic}) {
    if (s == to_string(c)) return c;
  }
  bad("unknown attention channel '" + s + "'");
}

}  // namespace

SessionConfig config_from_json(const json& j, SessionConfig cfg) {
  check_keys(j, "config",
             {"tick_rate", "scheme", "input_dofs", "seed", "session_name", "recording_dir",
              "rule_engine", "engine", "attention", "limits", "bridge", "task"});
  read(j, "tick_rate", cfg.tick_rate, "config");
  read(j, "input_dofs", cfg.input_dofs, "config");
  read(j, "seed", cfg.seed, "config");
  read(j, "session_name", cfg.session_name, "config");
  read(j, "rule_engine", cfg.rule_engine, "config");
  if (j.contains("recording_dir")) {
    std::string dir;
    read(j, "recording_dir", dir, "config");
    cfg.recording_dir = dir;
  }
  if (j.contains("scheme")) {
    std::string s;
    read(j, "scheme", s, "config");
    const auto scheme = parse_scheme(s);
    if (!scheme) bad("unknown scheme '" + s + "'");
    cfg.scheme = *scheme;
  }
  if (j.contains("engine")) {
    const auto& e = j["engine"];
    check_keys(e, "engine",
               {"minimal_hover_distance", "hover_height", "reach_radius", "rotation_scale"});
    read(e, "minimal_hover_distance", cfg.engine.minimal_hover_distance, "engine");
    read(e, "hover_height", cfg.engine.hover_height, "engine");
    read(e, "reach_radius", cfg.engine.reach_radius, "engine");
    read(e, "rotation_scale", cfg.engine.rotation_scale, "engine");
  }
  if (j.contains("attention")) {
    const auto& a = j["attention"];
    check_keys(a, "attention", {"realtime_threshold", "channels"});
    read(a, "realtime_threshold", cfg.attention.realtime_threshold, "attention");
    if (a.contains("channels")) {
      std::vector<std::string> names;
      read(a, "channels", names, "attention");
      cfg.attention.channels.clear();
      for (const auto& n : names) cfg.attention.channels.insert(parse_channel(n));
    }
  }
  if (j.contains("limits")) read_limits(j["limits"], cfg.limits, "limits");
  if (j.contains("bridge")) {
    const auto& b = j["bridge"];
    if (b.is_null()) {
      cfg.bridge.reset();
    } else {
      check_keys(b, "bridge", {"role", "endpoint", "sync_period", "external_limits"});
      BridgeConfig bc = cfg.bridge.value_or(BridgeConfig{});
      if (b.contains("role")) {
        std::string r;
        read(b, "role", r, "bridge");
        const auto role = parse_bridge_role(r);
        if (!role) bad("unknown bridge role '" + r + "'");
        bc.role = *role;
      }
      read(b, "endpoint", bc.endpoint, "bridge");
      read(b, "sync_period", bc.sync_period, "bridge");
      if (b.contains("external_limits")) {
        read_limits(b["external_limits"], bc.external_limits, "bridge.external_limits");
      }
      cfg.bridge = bc;
    }
  }
  if (j.contains("task")) {
    const auto& t = j["task"];
    check_keys(t, "task", {"place_tolerance", "base_margin", "edge_margin"});
    read(t, "place_tolerance", cfg.task.place_tolerance, "task");
    read(t, "base_margin", cfg.task.base_margin, "task");
    read(t, "edge_margin", cfg.task.edge_margin, "task");
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const SessionConfig& cfg) {
  json channels = json::array();
  for (auto c : cfg.attention.channels) channels.push_back(std::string(to_string(c)));
  json j = {
      {"tick_rate", cfg.tick_rate},
      {"scheme", std::string(to_string(cfg.scheme))},
      {"input_dofs", cfg.input_dofs},
      {"seed", cfg.seed},
      {"session_name", cfg.session_name},
      {"recording_dir", cfg.recording_dir.string()},
      {"rule_engine", cfg.rule_engine},
      {"engine",
       {{"minimal_hover_distance", cfg.engine.minimal_hover_distance},
        {"hover_height", cfg.engine.hover_height},
        {"reach_radius", cfg.engine.reach_radius},
        {"rotation_scale", cfg.engine.rotation_scale}}},
      {"attention",
       {{"realtime_threshold", cfg.attention.realtime_threshold}, {"channels", channels}}},
      {"limits", limits_json(cfg.limits)},
      {"task",
       {{"place_tolerance", cfg.task.place_tolerance},
        {"base_margin", cfg.task.base_margin},
        {"edge_margin", cfg.task.edge_margin}}},
  };
  if (cfg.bridge) {
    j["bridge"] = {{"role", std::string(to_string(cfg.bridge->role))},
                   {"endpoint", cfg.bridge->endpoint},
                   {"sync_period", cfg.bridge->sync_period},
                   {"external_limits", limits_json(cfg.bridge->external_limits)}};
  } else {
    j["bridge"] = nullptr;
  }
  return j;
}

SessionConfig load_config(const std::filesystem::path& path, SessionConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, "config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

}  // namespace admc
