/**
 * @file bridge_net.hpp
 * @brief TCP transport for the twin bridge and a network-facing fake arm.
 */

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "admc/twin_bridge.hpp"

namespace admc {

/// "host:port" → (host, port). Throws Error(kInvalidConfig).
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

/// Client side used by the session. Connects in the background, says HELLO
/// on every (re)connect and keeps retrying while the peer is away. Sends
/// while disconnected are dropped.
class BridgeLink final : public BridgeTransport {
 public:
  explicit BridgeLink(const std::string& endpoint,
                      std::chrono::milliseconds retry = std::chrono::milliseconds(500));
  ~BridgeLink() override;

  void send(const WireMessage& msg) override;
  std::vector<WireMessage> poll() override;
  bool connected() const override;
  /// Number of successful connections so far (handshakes sent).
  int connections() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Serves a FakeExternalArm over TCP: replies to HELLO with HELLO and LIMITS,
/// applies CMD targets, and reports POSE every period.
class FakeArmServer {
 public:
  FakeArmServer(const std::string& endpoint, FakeExternalArm arm, double period);
  ~FakeArmServer();

  /// Actual bound port (useful with port 0).
  std::uint16_t port() const;
  void start();  ///< background thread
  void run();    ///< blocks the caller
  void stop();
  ArmPose state() const;
  /// Drops the current client connection (to exercise reconnects).
  void kick();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace admc
