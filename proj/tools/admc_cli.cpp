// admc: command line front end.
//
//   admc serve       [options]         cockpit session over HTTP + WebSocket
//   admc headless    --agent NAME      scripted agent benchmark
//   admc replay FILE [--out F]         parse, summarize, re-record or stream
//   admc bridge-fake [options]         fake external arm for the twin bridge

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "admc/bridge_net.hpp"
#include "admc/config.hpp"
#include "admc/error.hpp"
#include "admc/record_replay.hpp"
#include "admc/session.hpp"
#include "admc/session_server.hpp"

namespace {

using namespace admc;

struct CommonFlags {
  std::string config_path;
  std::optional<double> tick_rate;
  std::optional<std::string> scheme;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> record_dir;
  std::optional<std::string> session_name;
  std::optional<std::string> bridge_role;
  std::optional<std::string> bridge_endpoint;
  std::optional<double> threshold;

  void add(CLI::App* app) {
    app->add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--tick-rate", tick_rate, "ticks per second");
    app->add_option("--scheme", scheme, "Classic | AdmcContinuous | AdmcThreshold | FollowMe");
    app->add_option("--seed", seed, "task RNG seed");
    app->add_option("--record-dir", record_dir, "write <session>_<episode>.csv files here");
    app->add_option("--session-name", session_name, "recording file prefix");
    app->add_option("--bridge-role", bridge_role, "None | PhysicalTwin | DigitalTwin");
    app->add_option("--bridge-endpoint", bridge_endpoint, "host:port of the external arm");
    app->add_option("--threshold", threshold, "realtime threshold for attention guidance");
  }

  SessionConfig resolve() const {
    SessionConfig cfg = config_path.empty() ? SessionConfig{} : load_config(config_path);
    if (tick_rate) cfg.tick_rate = *tick_rate;
    if (scheme) {
      auto s = parse_scheme(*scheme);
      if (!s) throw Error(ErrorCode::kInvalidConfig, "unknown scheme '" + *scheme + "'");
      cfg.scheme = *s;
    }
    if (seed) cfg.seed = *seed;
    if (record_dir) cfg.recording_dir = *record_dir;
    if (session_name) cfg.session_name = *session_name;
    if (threshold) cfg.attention.realtime_threshold = *threshold;
    if (bridge_role || bridge_endpoint) {
      BridgeConfig b = cfg.bridge.value_or(BridgeConfig{});
      if (bridge_role) {
        auto r = parse_bridge_role(*bridge_role);
        if (!r) throw Error(ErrorCode::kInvalidConfig, "unknown bridge role '" + *bridge_role + "'");
        b.role = *r;
      }
      if (bridge_endpoint) b.endpoint = *bridge_endpoint;
      if (b.role == BridgeRole::None) {
        cfg.bridge.reset();
      } else {
        cfg.bridge = b;
      }
    }
    cfg.validate();
    return cfg;
  }
};

/// Blocks SIGINT/SIGTERM for all threads started afterwards; wait_for_signal
/// then picks them up synchronously.
sigset_t block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

void wait_for_signal(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("signal {} received, shutting down", sig);
}

int cmd_serve(const CommonFlags& flags, const ServerOptions& options) {
  const SessionConfig cfg = flags.resolve();
  const sigset_t signals = block_signals();
  std::unique_ptr<BridgeTransport> transport;
  if (cfg.bridge) {
    transport = std::make_unique<BridgeLink>(cfg.bridge->endpoint);
    spdlog::info("bridge {} via {}", to_string(cfg.bridge->role), cfg.bridge->endpoint);
  }
  SessionServer server(options, std::make_unique<Session>(cfg, std::move(transport)));
  server.start();
  spdlog::info("serving {} on http://{}:{} (ws at /ws)", to_string(cfg.scheme), options.host,
               server.port());
  wait_for_signal(signals);
  server.stop();
  return 0;
}

int cmd_headless(const CommonFlags& flags, const std::string& agent_name, int episodes,
                 double max_seconds, const std::string& metrics_path) {
  SessionConfig cfg = flags.resolve();
  const auto agent = parse_agent(agent_name);
  if (!agent) throw Error(ErrorCode::kInvalidConfig, "unknown agent '" + agent_name + "'");
  const AgentRun run = run_agent(cfg, *agent, episodes, max_seconds);
  if (metrics_path.empty() || metrics_path == "-") {
    write_metrics_csv(std::cout, run.episodes);
  } else {
    std::ofstream out(metrics_path);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + metrics_path);
    write_metrics_csv(out, run.episodes);
  }
  double switches = 0.0;
  for (const auto& m : run.episodes) switches += m.mode_switches;
  spdlog::info("{}: {}/{} episodes, {} ticks, mean mode switches {:.3f}", agent_name,
               run.episodes.size(), episodes, run.ticks,
               run.episodes.empty() ? 0.0 : switches / static_cast<double>(run.episodes.size()));
  return run.all_completed ? 0 : 2;
}

int cmd_replay(const std::string& file, const std::string& out_path, bool serve,
               const ServerOptions& options) {
  Recording rec = load_recording(file);
  const Metrics m = replay_metrics(rec);
  spdlog::info("{}: {} frames at {} Hz", file, rec.frames.size(), rec.header.tick_rate);
  std::cout << "completion_time," << m.completion_time << "\nmode_switches," << m.mode_switches
            << "\nsuggestions_accepted," << m.suggestions_accepted << "\nepisodes_completed,"
            << m.episodes_completed << '\n';
  if (!out_path.empty()) {
    Replayer replayer(rec);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + out_path);
    RecordWriter writer(out);
    writer.write_header(replayer.header());
    while (auto f = replayer.next()) writer.record_tick(*f);
    writer.flush();
  }
  if (serve) {
    const sigset_t signals = block_signals();
    SessionServer server(options, std::move(rec));
    server.start();
    spdlog::info("replaying on http://{}:{} (ws at /ws)", options.host, server.port());
    wait_for_signal(signals);
    server.stop();
  }
  return 0;
}

int cmd_bridge_fake(const std::string& endpoint, double period, const VelocityLimits& limits,
                    const std::string& trajectory, double amplitude) {
  ArmPose start;
  start.pose = {{0.0, -0.2, 0.25}, Rotation::identity(), Frame::World};
  FakeExternalArm arm(start, limits);
  if (trajectory == "sine") {
    arm.set_trajectory([start, amplitude](double t) {
      ArmPose p = start;
      p.pose.position.x += amplitude * std::sin(2.0 * kPi * 0.2 * t);
      return p;
    });
  } else if (trajectory != "none") {
    throw Error(ErrorCode::kInvalidConfig, "unknown trajectory '" + trajectory + "'");
  }
  const sigset_t signals = block_signals();
  FakeArmServer server(endpoint, std::move(arm), period);
  server.start();
  spdlog::info("fake external arm on port {} (period {} s, trajectory {})", server.port(), period,
               trajectory);
  wait_for_signal(signals);
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive DoF mapping control: simulation, cockpit server and tools"};
  app.require_subcommand(1);

  CommonFlags serve_flags;
  ServerOptions serve_options;
  auto* serve = app.add_subcommand("serve", "run an interactive session for the cockpit");
  serve_flags.add(serve);
  serve->add_option("--host", serve_options.host, "bind address");
  serve->add_option("--port", serve_options.port, "HTTP/WebSocket port");
  serve->add_option("--static", serve_options.static_root, "directory with the cockpit files");

  CommonFlags headless_flags;
  std::string agent = "GreedyAdmc";
  int episodes = 10;
  double max_seconds = 60.0;
  std::string metrics_path;
  auto* headless = app.add_subcommand("headless", "run a scripted agent without UI");
  headless_flags.add(headless);
  headless->add_option("--agent", agent, "GreedyAdmc | ClassicOracle");
  headless->add_option("--episodes", episodes, "episodes to complete")->check(CLI::PositiveNumber);
  headless->add_option("--max-episode-seconds", max_seconds, "simulated time limit per episode");
  headless->add_option("--metrics", metrics_path, "metrics CSV output (default stdout)");

  std::string replay_file;
  std::string replay_out;
  bool replay_serve = false;
  ServerOptions replay_options;
  auto* replay = app.add_subcommand("replay", "inspect, re-record or stream a recording");
  replay->add_option("file", replay_file, "recording CSV")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out, "write the replayed frames to this file");
  replay->add_flag("--serve", replay_serve, "stream the frames to cockpit clients");
  replay->add_option("--host", replay_options.host, "bind address");
  replay->add_option("--port", replay_options.port, "HTTP/WebSocket port");
  replay->add_option("--static", replay_options.static_root, "directory with the cockpit files");

  std::string fake_endpoint = "127.0.0.1:9090";
  double fake_period = 0.1;
  VelocityLimits fake_limits;
  std::string fake_trajectory = "none";
  double fake_amplitude = 0.1;
  auto* fake = app.add_subcommand("bridge-fake", "serve a scripted external arm");
  fake->add_option("--endpoint", fake_endpoint, "listen address host:port");
  fake->add_option("--period", fake_period, "report period in seconds");
  fake->add_option("--vel-trans", fake_limits.vel_trans, "m/s");
  fake->add_option("--vel-rot", fake_limits.vel_rot, "rad/s");
  fake->add_option("--vel-fingers", fake_limits.vel_fingers, "aperture/s");
  fake->add_option("--trajectory", fake_trajectory, "none | sine");
  fake->add_option("--amplitude", fake_amplitude, "sine amplitude in meters");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return cmd_serve(serve_flags, serve_options);
    if (*headless) return cmd_headless(headless_flags, agent, episodes, max_seconds, metrics_path);
    if (*replay) return cmd_replay(replay_file, replay_out, replay_serve, replay_options);
    if (*fake) {
      return cmd_bridge_fake(fake_endpoint, fake_period, fake_limits, fake_trajectory,
                             fake_amplitude);
    }
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
