/**
 * @file session_server.hpp
 * @brief HTTP + WebSocket front of a session: serves the cockpit's static
 *        files, streams state at the tick rate and accepts input events.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "admc/record_replay.hpp"
#include "admc/session.hpp"

namespace admc {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  ///< 0 picks a free port
  std::filesystem::path static_root;
  std::size_t client_queue = 8;  ///< per-client backlog before dropping the oldest
};

/// Content type for a static file, by extension.
std::string_view mime_type(const std::filesystem::path& path);
/// Maps a request target onto a file under `root`; empty when the target
/// escapes the root or is malformed.
std::filesystem::path resolve_static(const std::filesystem::path& root, std::string_view target);

class SessionServer {
 public:
  /// Live mode: ticks `session` at its configured rate.
  SessionServer(ServerOptions options, std::unique_ptr<Session> session);
  /// Replay mode: streams the recording's frames at its tick rate, looping.
  SessionServer(ServerOptions options, Recording recording);
  ~SessionServer();

  std::uint16_t port() const;
  void start();  ///< background threads
  void run();    ///< blocks until stop()
  void stop();
  std::size_t client_count() const;
  std::int64_t ticks() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace admc
