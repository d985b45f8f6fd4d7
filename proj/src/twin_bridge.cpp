#include "admc/twin_bridge.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "admc/csv_number.hpp"
#include "admc/error.hpp"

namespace admc {

std::string_view to_string(BridgeRole role) {
  switch (role) {
    case BridgeRole::None: return "None";
    case BridgeRole::PhysicalTwin: return "PhysicalTwin";
    case BridgeRole::DigitalTwin: return "DigitalTwin";
  }
  return "?";
}

std::optional<BridgeRole> parse_bridge_role(std::string_view text) {
  for (auto r : {BridgeRole::None, BridgeRole::PhysicalTwin, BridgeRole::DigitalTwin}) {
    if (text == to_string(r)) return r;
  }
  return std::nullopt;
}

void BridgeConfig::validate() const {
  if (!(sync_period > 0.0) || !std::isfinite(sync_period)) {
    throw Error(ErrorCode::kInvalidConfig, "bridge sync_period must be positive");
  }
  external_limits.validate();
}

WirePose to_wire(const Pose& p, double aperture) {
  const Rotation& q = p.orientation;
  WirePose w;
  w.position = {p.position.x, -p.position.y, p.position.z};
  w.orientation = {q.w(), -q.x(), q.y(), -q.z()};
  const double angle = (1.0 - std::clamp(aperture, 0.0, 1.0)) * kFingerClosedAngle;
  w.fingers = {angle, angle, angle};
  return w;
}

ArmPose from_wire(const WirePose& w) {
  const auto& o = w.orientation;
  ArmPose out;
  out.pose = {{w.position.x, -w.position.y, w.position.z},
              Rotation::from_components(o[0], -o[1], o[2], -o[3]),
              Frame::World};
  const double mean = (w.fingers[0] + w.fingers[1] + w.fingers[2]) / 3.0;
  out.aperture = std::clamp(1.0 - mean / kFingerClosedAngle, 0.0, 1.0);
  return out;
}

ArmPose clamp_towards(const ArmPose& external, const ArmPose& sim, const VelocityLimits& limits,
                      double period) {
  ArmPose out;
  const Vec3 d = sim.pose.position - external.pose.position;
  const double max_d = limits.vel_trans * period;
  const double dn = d.norm();
  out.pose.position = dn > max_d ? external.pose.position + d * (max_d / dn) : sim.pose.position;

  const Rotation rel = external.pose.orientation.inverse() * sim.pose.orientation;
  const double max_r = limits.vel_rot * period;
  const double angle = rel.angle();
  out.pose.orientation = angle > max_r ? external.pose.orientation * rel.scaled(max_r / angle)
                                       : sim.pose.orientation;

  const double max_f = limits.vel_fingers * period;
  out.aperture = external.aperture + std::clamp(sim.aperture - external.aperture, -max_f, max_f);
  return out;
}

SyncResult sync_tick(const BridgeConfig& cfg, const ArmState& sim,
                     const std::optional<ExternalState>& external) {
  SyncResult out;
  if (cfg.role == BridgeRole::None || !external) return out;
  const ArmPose ext = from_wire(external->pose);
  if (cfg.role == BridgeRole::PhysicalTwin) {
    const ArmPose target = clamp_towards(ext, {sim.end_effector, sim.finger_aperture},
                                         cfg.external_limits, cfg.sync_period);
    out.command = to_wire(target.pose, target.aperture);
  } else {
    ArmState next = follow_me(sim, ext.pose);
    next.last_aperture_delta = ext.aperture - sim.finger_aperture;
    next.finger_aperture = ext.aperture;
    out.sim = next;
  }
  return out;
}

ArmState attach_bridge(const ArmState& sim, const BridgeConfig& cfg) {
  ArmState next = sim;
  if (cfg.role == BridgeRole::PhysicalTwin) next.limits = cfg.external_limits;
  return next;
}

namespace {

void put(std::string& out, double v) {
  out += ' ';
  out += format_double(v);
}

void put_pose(std::string& out, const WirePose& w) {
  for (double v : {w.position.x, w.position.y, w.position.z}) put(out, v);
  for (double v : w.orientation) put(out, v);
  for (double v : w.fingers) put(out, v);
}

class Fields {
 public:
  explicit Fields(std::string_view payload) {
    std::size_t i = 0;
    while (i < payload.size()) {
      const std::size_t j = payload.find(' ', i);
      const std::size_t end = j == std::string_view::npos ? payload.size() : j;
      if (end == i) throw Error(ErrorCode::kProtocol, "empty field in wire message");
      parts_.push_back(payload.substr(i, end - i));
      i = end + 1;
      if (j != std::string_view::npos && i == payload.size()) {
        throw Error(ErrorCode::kProtocol, "trailing space in wire message");
      }
    }
    if (parts_.empty()) throw Error(ErrorCode::kProtocol, "empty wire message");
  }

  std::string_view kind() const { return parts_[0]; }
  std::size_t size() const { return parts_.size(); }

  std::string_view text() {
    if (pos_ >= parts_.size()) throw Error(ErrorCode::kProtocol, "wire message too short");
    return parts_[pos_++];
  }
  double number() {
    const auto t = text();
    const auto v = parse_double(t);
    if (!v || !std::isfinite(*v)) {
      throw Error(ErrorCode::kProtocol, "bad number '" + std::string(t) + "'");
    }
    return *v;
  }
  long long integer() {
    const auto t = text();
    const auto v = parse_int(t);
    if (!v) throw Error(ErrorCode::kProtocol, "bad integer '" + std::string(t) + "'");
    return *v;
  }
  WirePose pose() {
    WirePose w;
    w.position = {number(), number(), number()};
    for (double& q : w.orientation) q = number();
    for (double& f : w.fingers) f = number();
    const auto& o = w.orientation;
    if (std::abs(o[0] * o[0] + o[1] * o[1] + o[2] * o[2] + o[3] * o[3] - 1.0) > 1e-6) {
      throw Error(ErrorCode::kProtocol, "wire orientation is not a unit quaternion");
    }
    return w;
  }
  void done() const {
    if (pos_ != parts_.size()) throw Error(ErrorCode::kProtocol, "wire message too long");
  }

 private:
  std::vector<std::string_view> parts_;
  std::size_t pos_ = 1;
};

}  // namespace

std::string encode(const WireMessage& msg) {
  std::string payload;
  if (const auto* h = std::get_if<HelloMsg>(&msg)) {
    payload = "HELLO " + h->peer + ' ' + std::to_string(h->version);
  } else if (const auto* p = std::get_if<PoseMsg>(&msg)) {
    payload = "POSE";
    put_pose(payload, p->state.pose);
    payload += ' ' + std::to_string(p->state.joint_angles.size());
    for (double j : p->state.joint_angles) put(payload, j);
  } else if (const auto* c = std::get_if<CmdMsg>(&msg)) {
    payload = "CMD";
    put_pose(payload, c->target);
  } else {
    const auto& l = std::get<LimitsMsg>(msg).limits;
    payload = "LIMITS";
    for (double v : {l.vel_trans, l.vel_rot, l.vel_fingers}) put(payload, v);
  }
  return std::to_string(payload.size()) + '\n' + payload;
}

WireMessage decode_payload(std::string_view payload) {
  Fields f(payload);
  const auto kind = f.kind();
  if (kind == "HELLO") {
    HelloMsg h;
    h.peer = std::string(f.text());
    h.version = static_cast<int>(f.integer());
    f.done();
    return h;
  }
  if (kind == "POSE") {
    PoseMsg p;
    p.state.pose = f.pose();
    const long long n = f.integer();
    if (n < 0 || n > 64) throw Error(ErrorCode::kProtocol, "bad joint count");
    for (long long i = 0; i < n; ++i) p.state.joint_angles.push_back(f.number());
    f.done();
    return p;
  }
  if (kind == "CMD") {
    CmdMsg c;
    c.target = f.pose();
    f.done();
    return c;
  }
  if (kind == "LIMITS") {
    LimitsMsg l;
    l.limits = {f.number(), f.number(), f.number()};
    f.done();
    try {
      l.limits.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kProtocol, e.what());
    }
    return l;
  }
  throw Error(ErrorCode::kProtocol, "unknown wire message kind '" + std::string(kind) + "'");
}

void WireDecoder::feed(std::string_view bytes) { buffer_.append(bytes); }

std::optional<WireMessage> WireDecoder::next() {
  const std::size_t nl = buffer_.find('\n');
  if (nl == std::string::npos) {
    if (buffer_.size() > 12) throw Error(ErrorCode::kProtocol, "missing length prefix");
    return std::nullopt;
  }
  std::size_t len = 0;
  const auto [ptr, ec] = std::from_chars(buffer_.data(), buffer_.data() + nl, len);
  if (ec != std::errc() || ptr != buffer_.data() + nl || nl == 0 || len > 1 << 16) {
    throw Error(ErrorCode::kProtocol, "bad length prefix");
  }
  if (buffer_.size() < nl + 1 + len) return std::nullopt;
  const std::string payload = buffer_.substr(nl + 1, len);
  buffer_.erase(0, nl + 1 + len);
  return decode_payload(payload);
}

FakeExternalArm::FakeExternalArm(ArmPose initial, VelocityLimits limits)
    : state_(initial), limits_(limits) {
  limits_.validate();
}

void FakeExternalArm::advance(double dt) {
  time_ += dt;
  if (trajectory_) {
    state_ = trajectory_(time_);
  } else if (target_) {
    state_ = clamp_towards(state_, *target_, limits_, dt);
  }
}

ExternalState FakeExternalArm::report() const {
  ExternalState s;
  s.pose = to_wire(state_.pose, state_.aperture);
  // cosmetic six-joint placeholder so consumers see the field populated
  s.joint_angles.assign(6, 0.0);
  return s;
}

void LoopbackTransport::send(const WireMessage& msg) {
  ++sent_;
  if (const auto* c = std::get_if<CmdMsg>(&msg)) {
    arm_.command(c->target);
  }
}

std::vector<WireMessage> LoopbackTransport::poll() {
  std::vector<WireMessage> out;
  if (!handshake_done_) {
    out.emplace_back(HelloMsg{"external", kWireProtocolVersion});
    out.emplace_back(LimitsMsg{arm_.limits()});
    handshake_done_ = true;
  } else {
    arm_.advance(period_);
  }
  out.emplace_back(PoseMsg{arm_.report()});
  return out;
}

}  // namespace admc
