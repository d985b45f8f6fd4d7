#include <gtest/gtest.h>

#include "admc/error.hpp"
#include "admc/twin_bridge.hpp"
#include "support.hpp"

namespace admc {
namespace {

using test::Rng;

Pose random_pose(Rng& rng) { return {rng.vec3(), rng.rotation(), Frame::World}; }

// Mirror across XZ as a reflection matrix; a rotation R maps to S R S.
Eigen::Matrix3d mirror() { return Eigen::Vector3d(1, -1, 1).asDiagonal(); }

TEST(Wire, MirrorExamples) {
  const WirePose w = to_wire({{1, 2, 3}, Rotation::identity(), Frame::World}, 1.0);
  EXPECT_EQ(w.position, (Vec3{1, -2, 3}));
  EXPECT_EQ(w.orientation, (std::array<double, 4>{1, -0.0, 0, -0.0}));
  EXPECT_EQ(w.fingers, (std::array<double, 3>{0, 0, 0}));
  EXPECT_EQ(to_wire({}, 0.0).fingers[1], kFingerClosedAngle);
}

TEST(Wire, OrientationIsConjugatedByMirror) {
  Rng rng(60);
  for (int i = 0; i < 500; ++i) {
    const Pose p = random_pose(rng);
    const WirePose w = to_wire(p, 0.5);
    const Eigen::Quaterniond q(w.orientation[0], w.orientation[1], w.orientation[2],
                               w.orientation[3]);
    const Eigen::Matrix3d expected =
        mirror() * test::to_eigen(p.orientation).toRotationMatrix() * mirror();
    EXPECT_NEAR((q.toRotationMatrix() - expected).norm(), 0.0, 1e-12);
  }
}

TEST(Wire, Involution) {
  Rng rng(61);
  for (int i = 0; i < 10000; ++i) {
    const Pose p = random_pose(rng);
    const double ap = rng.uniform(0.0, 1.0);
    const ArmPose back = from_wire(to_wire(p, ap));
    EXPECT_NEAR((back.pose.position - p.position).norm(), 0.0, 1e-12);
    EXPECT_NEAR(angular_distance(back.pose.orientation, p.orientation), 0.0, 1e-12);
    EXPECT_NEAR(back.aperture, ap, 1e-12);
  }
}

TEST(Wire, IsometryOnPosePairs) {
  Rng rng(62);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const WirePose wa = to_wire(a, 1.0);
    const WirePose wb = to_wire(b, 1.0);
    EXPECT_NEAR((wa.position - wb.position).norm(), (a.position - b.position).norm(), 1e-12);
    const Rotation ra = Rotation::from_components(wa.orientation[0], wa.orientation[1],
                                                  wa.orientation[2], wa.orientation[3]);
    const Rotation rb = Rotation::from_components(wb.orientation[0], wb.orientation[1],
                                                  wb.orientation[2], wb.orientation[3]);
    EXPECT_NEAR(angular_distance(ra, rb), angular_distance(a.orientation, b.orientation), 1e-9);
  }
}

TEST(Clamp, JumpAdvancesAtMostLimitTimesPeriod) {
  const ArmPose ext{{{0, 0, 0.2}, {}, Frame::World}, 1.0};
  const ArmPose sim{{{1, 0, 0.2}, Rotation::yaw(1.0), Frame::World}, 0.0};
  VelocityLimits lim{0.2, 1.0, 1.0};
  const ArmPose c = clamp_towards(ext, sim, lim, 0.1);
  EXPECT_NEAR(c.pose.position.x, 0.02, 1e-15);
  EXPECT_NEAR(c.pose.orientation.angle(), 0.1, 1e-12);
  EXPECT_NEAR(c.aperture, 0.9, 1e-15);
  const ArmPose near{{{0.01, 0, 0.2}, Rotation::yaw(0.05), Frame::World}, 0.95};
  const ArmPose d = clamp_towards(ext, near, lim, 0.1);
  EXPECT_EQ(d.pose.position, near.pose.position);
  EXPECT_EQ(d.pose.orientation, near.pose.orientation);
}

TEST(Sync, RoleNoneAndNoReportProduceNothing) {
  BridgeConfig cfg;
  ArmState sim;
  const ExternalState ext{to_wire({}, 1.0), {}};
  SyncResult r = sync_tick(cfg, sim, ext);
  EXPECT_FALSE(r.command);
  EXPECT_FALSE(r.sim);
  cfg.role = BridgeRole::PhysicalTwin;
  r = sync_tick(cfg, sim, std::nullopt);
  EXPECT_FALSE(r.command);
}

TEST(Sync, PhysicalTwinTracksJumpMonotonically) {
  BridgeConfig cfg;
  cfg.role = BridgeRole::PhysicalTwin;
  cfg.external_limits = {0.2, 1.0, 1.0};
  ArmState sim;
  sim.end_effector = {{-0.5, 0.0, 0.3}, {}, Frame::World};
  FakeExternalArm arm({sim.end_effector, 1.0}, cfg.external_limits);
  sim.end_effector.position.x += 1.0;
  double prev = 1.0;
  for (int i = 0; i < 60; ++i) {
    const Vec3 before = arm.state().pose.position;
    const SyncResult r = sync_tick(cfg, sim, arm.report());
    ASSERT_TRUE(r.command);
    const ArmPose cmd = from_wire(*r.command);
    EXPECT_LE((cmd.pose.position - before).norm(), 0.02 + 1e-9);
    arm.command(*r.command);
    arm.advance(cfg.sync_period);
    const double dist = (arm.state().pose.position - sim.end_effector.position).norm();
    EXPECT_LE(dist, prev);
    prev = dist;
  }
  EXPECT_LT(prev, 1e-9);
}

TEST(Sync, DigitalTwinFollowsSineSampleExact) {
  BridgeConfig cfg;
  cfg.role = BridgeRole::DigitalTwin;
  FakeExternalArm arm;
  arm.set_trajectory([](double t) {
    return ArmPose{{{0.2 * std::sin(t), 0.1, 0.3}, Rotation::yaw(0.5 * std::sin(t)), Frame::World},
                   0.5 + 0.5 * std::cos(t)};
  });
  ArmState sim;
  for (int i = 0; i < 50; ++i) {
    arm.advance(cfg.sync_period);
    const SyncResult r = sync_tick(cfg, sim, arm.report());
    ASSERT_TRUE(r.sim);
    EXPECT_FALSE(r.command);
    sim = *r.sim;
    EXPECT_NEAR((sim.end_effector.position - arm.state().pose.position).norm(), 0.0, 1e-15);
    EXPECT_NEAR(angular_distance(sim.end_effector.orientation, arm.state().pose.orientation), 0.0,
                1e-12);
    EXPECT_NEAR(sim.finger_aperture, arm.state().aperture, 1e-12);
  }
}

TEST(Attach, PhysicalTwinAdoptsExternalLimits) {
  BridgeConfig cfg;
  cfg.external_limits = {0.05, 0.3, 0.4};
  ArmState sim;
  EXPECT_EQ(attach_bridge(sim, cfg).limits, sim.limits);
  cfg.role = BridgeRole::PhysicalTwin;
  EXPECT_EQ(attach_bridge(sim, cfg).limits, cfg.external_limits);
}

TEST(Config, Validation) {
  BridgeConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.sync_period = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_EQ(parse_bridge_role("DigitalTwin"), BridgeRole::DigitalTwin);
  EXPECT_FALSE(parse_bridge_role("digital"));
}

TEST(Codec, RoundTripEveryKind) {
  Rng rng(63);
  const WirePose w = to_wire(random_pose(rng), 0.3);
  const std::vector<WireMessage> msgs{
      HelloMsg{"sim", 1}, PoseMsg{{w, {0.1, -0.2, 3.0}}}, PoseMsg{{w, {}}}, CmdMsg{w},
      LimitsMsg{{0.2, 1.0, 0.5}}};
  for (const auto& m : msgs) {
    const std::string bytes = encode(m);
    const std::size_t nl = bytes.find('\n');
    EXPECT_EQ(std::stoul(bytes.substr(0, nl)), bytes.size() - nl - 1);
    EXPECT_EQ(decode_payload(bytes.substr(nl + 1)), m);
  }
}

TEST(Codec, CommandsCarryNoJoints) {
  const std::string cmd = encode(CmdMsg{to_wire({}, 1.0)});
  const std::string payload = cmd.substr(cmd.find('\n') + 1);
  EXPECT_EQ(std::count(payload.begin(), payload.end(), ' '), 10);
}

TEST(Codec, RejectsGarbage) {
  for (const char* bad : {"", "NOPE 1", "HELLO sim", "HELLO sim 1 2", "LIMITS 1 2 x",
                          "CMD 0 0 0 2 0 0 0 0 0 0", "POSE 0 0 0 1 0 0 0 0 0 0 2 1",
                          "LIMITS 1  2 3", "LIMITS 1 2 3 "}) {
    EXPECT_THROW(decode_payload(bad), Error) << bad;
  }
}

TEST(Decoder, ReassemblesSplitStream) {
  const std::string stream = encode(HelloMsg{"external", 1}) + encode(LimitsMsg{{0.1, 0.2, 0.3}}) +
                             encode(CmdMsg{to_wire({{1, 2, 3}, {}, Frame::World}, 0.5)});
  WireDecoder dec;
  std::vector<WireMessage> got;
  for (char c : stream) {
    dec.feed(std::string_view(&c, 1));
    while (auto m = dec.next()) got.push_back(*m);
  }
  ASSERT_EQ(got.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<HelloMsg>(got[0]));
  EXPECT_EQ(std::get<LimitsMsg>(got[1]).limits, (VelocityLimits{0.1, 0.2, 0.3}));
  EXPECT_TRUE(std::holds_alternative<CmdMsg>(got[2]));

  WireDecoder bad;
  bad.feed("abc\nHELLO");
  EXPECT_THROW(bad.next(), Error);
}

TEST(Loopback, HandshakeThenPeriodicPoses) {
  FakeExternalArm arm({{{0.1, 0.0, 0.3}, {}, Frame::World}, 1.0}, {0.2, 1.0, 1.0});
  LoopbackTransport t(arm, 0.1);
  const auto first = t.poll();
  ASSERT_EQ(first.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<HelloMsg>(first[0]));
  EXPECT_TRUE(std::holds_alternative<LimitsMsg>(first[1]));
  EXPECT_TRUE(std::holds_alternative<PoseMsg>(first[2]));
  t.send(CmdMsg{to_wire({{0.5, 0.0, 0.3}, {}, Frame::World}, 1.0)});
  const auto next = t.poll();
  ASSERT_EQ(next.size(), 1u);
  EXPECT_NEAR(arm.state().pose.position.x, 0.12, 1e-12);
  EXPECT_NEAR(arm.time(), 0.1, 1e-15);
  EXPECT_EQ(t.sent_count(), 1u);
}

}  // namespace
}  // namespace admc
