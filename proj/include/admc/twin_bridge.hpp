/**
 * @file twin_bridge.hpp
 * @brief Mirroring between the simulated arm and an external one.
 *
 * The simulation frame is left-handed (X forward, Y right, Z up); the wire
 * frame is its right-handed mirror across the XZ plane. Only end-effector
 * poses and finger angles travel to the external arm. Joint angles reported
 * by the external arm are passed through for display and never sent back.
 */

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "admc/arm_sim.hpp"
#include "admc/core_math.hpp"

namespace admc {

enum class BridgeRole { None, PhysicalTwin, DigitalTwin };

std::string_view to_string(BridgeRole role);
std::optional<BridgeRole> parse_bridge_role(std::string_view text);

struct BridgeConfig {
  BridgeRole role = BridgeRole::None;
  std::string endpoint = "127.0.0.1:9090";
  double sync_period = 0.1;  ///< seconds
  VelocityLimits external_limits;

  /// Throws Error(kInvalidConfig) unless sync_period > 0 and limits are valid.
  void validate() const;
};

/// Finger angle (radians) of a fully closed finger; open is 0.
constexpr double kFingerClosedAngle = 1.0;

struct WirePose {
  Vec3 position;                          ///< meters, right-handed
  std::array<double, 4> orientation{1.0, 0.0, 0.0, 0.0};  ///< w, x, y, z
  std::array<double, 3> fingers{};        ///< radians

  bool operator==(const WirePose&) const = default;
};

struct ArmPose {
  Pose pose;
  double aperture = 1.0;
};

WirePose to_wire(const Pose& p, double aperture);
ArmPose from_wire(const WirePose& w);

/// Pose the external arm is told to reach this sync: `sim` approached from
/// `external` by at most limits * period in translation, rotation and
/// aperture.
ArmPose clamp_towards(const ArmPose& external, const ArmPose& sim,
                      const VelocityLimits& limits, double period);

struct ExternalState {
  WirePose pose;
  std::vector<double> joint_angles;  ///< opaque, display only
};

struct SyncResult {
  std::optional<WirePose> command;  ///< PhysicalTwin: pose sent to the external arm
  std::optional<ArmState> sim;      ///< DigitalTwin: simulation overwritten
};

/// One synchronization step. PhysicalTwin emits nothing until the external
/// arm has reported at least once; role None never produces anything.
SyncResult sync_tick(const BridgeConfig& cfg, const ArmState& sim,
                     const std::optional<ExternalState>& external);

/// Limits the simulation adopts when a bridge is attached.
ArmState attach_bridge(const ArmState& sim, const BridgeConfig& cfg);

// Wire protocol: each message is "<payload length>\n<payload>", payload a
// single line "KIND field field ...".

constexpr int kWireProtocolVersion = 1;

struct HelloMsg {
  std::string peer;  ///< "sim" or "external"
  int version = kWireProtocolVersion;
  bool operator==(const HelloMsg&) const = default;
};
struct PoseMsg {
  ExternalState state;
  bool operator==(const PoseMsg& o) const {
    return state.pose == o.state.pose && state.joint_angles == o.state.joint_angles;
  }
};
struct CmdMsg {
  WirePose target;
  bool operator==(const CmdMsg&) const = default;
};
struct LimitsMsg {
  VelocityLimits limits;
  bool operator==(const LimitsMsg&) const = default;
};

using WireMessage = std::variant<HelloMsg, PoseMsg, CmdMsg, LimitsMsg>;

std::string encode(const WireMessage& msg);
/// Parses one payload (without the length prefix). Throws Error(kProtocol).
WireMessage decode_payload(std::string_view payload);

/// Incremental splitter for a byte stream of length-prefixed messages.
class WireDecoder {
 public:
  void feed(std::string_view bytes);
  /// Next complete message, if any. Throws Error(kProtocol) on garbage.
  std::optional<WireMessage> next();

 private:
  std::string buffer_;
};

/// Scripted stand-in for a physical arm. It moves towards the last command
/// no faster than its limits, or follows a trajectory when one is set.
class FakeExternalArm {
 public:
  using Trajectory = std::function<ArmPose(double t)>;

  explicit FakeExternalArm(ArmPose initial = {}, VelocityLimits limits = {});

  void set_trajectory(Trajectory trajectory) { trajectory_ = std::move(trajectory); }
  void command(const WirePose& target) { target_ = from_wire(target); }
  /// Advances internal time by dt.
  void advance(double dt);
  ExternalState report() const;

  const ArmPose& state() const { return state_; }
  const VelocityLimits& limits() const { return limits_; }
  double time() const { return time_; }

 private:
  ArmPose state_;
  VelocityLimits limits_;
  std::optional<ArmPose> target_;
  Trajectory trajectory_;
  double time_ = 0.0;
};

/// Transport seen by the session: non-blocking send and drain.
class BridgeTransport {
 public:
  virtual ~BridgeTransport() = default;
  virtual void send(const WireMessage& msg) = 0;
  virtual std::vector<WireMessage> poll() = 0;
  virtual bool connected() const = 0;
};

/// In-process transport wired straight to a FakeExternalArm. The first poll
/// delivers the handshake, each later poll advances the arm by one period.
class LoopbackTransport final : public BridgeTransport {
 public:
  LoopbackTransport(FakeExternalArm& arm, double period) : arm_(arm), period_(period) {}

  void send(const WireMessage& msg) override;
  std::vector<WireMessage> poll() override;
  bool connected() const override { return true; }

  std::size_t sent_count() const { return sent_; }

 private:
  FakeExternalArm& arm_;
  double period_;
  bool handshake_done_ = false;
  std::size_t sent_ = 0;
};

}  // namespace admc
