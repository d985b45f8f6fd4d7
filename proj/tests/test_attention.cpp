#include <gtest/gtest.h>

#include "admc/attention.hpp"
#include "admc/error.hpp"
#include "support.hpp"

namespace admc {
namespace {

using test::Rng;

// Unit vector in the (tx, ty) plane at `angle` from tx.
Vec7 at_angle(double angle) { return Vec7{{std::cos(angle), std::sin(angle), 0, 0, 0, 0, 0}}; }

int count_events(const std::vector<Vec7>& suggested, const Vec7& active, AttentionConfig cfg) {
  AttentionState st;
  int events = 0;
  for (const Vec7& s : suggested) {
    const AttentionUpdate u = update(st, active, s, cfg);
    st = u.state;
    if (u.event) ++events;
  }
  return events;
}

TEST(NearlyEqual, Examples) {
  const Vec7 a{{0.3, -0.2, 0.1, 0.9, 0, 0, 0.5}};
  EXPECT_TRUE(adaptive_axes_nearly_equal(a, a, 0.2));
  EXPECT_FALSE(adaptive_axes_nearly_equal(a, -a, 0.2));
  EXPECT_FALSE(adaptive_axes_nearly_equal(Vec7::unit(0), Vec7::unit(1), 0.5));
  EXPECT_TRUE(adaptive_axes_nearly_equal(Vec7::unit(0), Vec7::unit(1), 0.5000001));
}

TEST(NearlyEqual, ZeroVectors) {
  EXPECT_TRUE(adaptive_axes_nearly_equal(Vec7{}, Vec7{}, 0.2));
  EXPECT_FALSE(adaptive_axes_nearly_equal(Vec7{}, Vec7::unit(3), 0.2));
  EXPECT_FALSE(adaptive_axes_nearly_equal(Vec7::unit(3), Vec7{}, 0.2));
}

TEST(NearlyEqual, EquivalentToDifference) {
  Rng rng(30);
  for (double t : {0.05, 0.2, 0.5}) {
    for (int i = 0; i < 2000; ++i) {
      const Vec7 a = rng.vec7();
      const Vec7 b = rng.vec7();
      EXPECT_EQ(adaptive_axes_nearly_equal(a, b, t), difference(a, b) < t);
    }
  }
}

TEST(Update, ContinuousNeverFires) {
  AttentionConfig cfg;
  cfg.mode = AttentionMode::Continuous;
  std::vector<Vec7> traj;
  for (int i = 0; i < 50; ++i) traj.push_back(at_angle(i % 2 ? 2.0 : 0.0));
  EXPECT_EQ(count_events(traj, at_angle(0.0), cfg), 0);
}

TEST(Update, StaysWithinThresholdNeverFires) {
  std::vector<Vec7> traj;
  for (int i = 0; i < 100; ++i) traj.push_back(at_angle(0.5 * std::sin(i * 0.1)));
  EXPECT_EQ(count_events(traj, at_angle(0.0), {}), 0);
}

TEST(Update, FiresOncePerCrossing) {
  // difference 0.2 sits at cos = 0.6, about 0.927 rad
  for (int k : {1, 3, 7}) {
    std::vector<Vec7> traj;
    for (int c = 0; c < k; ++c) {
      for (int i = 0; i < 4; ++i) traj.push_back(at_angle(0.2 * i));
      for (int i = 0; i < 6; ++i) traj.push_back(at_angle(1.2 + 0.1 * i));
    }
    EXPECT_EQ(count_events(traj, at_angle(0.0), {}), k) << "k=" << k;
  }
}

TEST(Update, FrozenAtBoundaryFiresOnce) {
  const double boundary = std::acos(0.6);
  std::vector<Vec7> traj{at_angle(0.0)};
  for (int i = 0; i < 500; ++i) traj.push_back(at_angle(boundary + 1e-9));
  EXPECT_EQ(count_events(traj, at_angle(0.0), {}), 1);
}

TEST(Update, NotificationCarriesChannelsAndTone) {
  AttentionConfig cfg;
  cfg.channels = {Channel::Audio};
  const AttentionUpdate u = update({}, at_angle(0.0), at_angle(kPi / 2), cfg);
  ASSERT_TRUE(u.event);
  EXPECT_EQ(u.event->channels, std::set<Channel>{Channel::Audio});
  EXPECT_EQ(u.event->tone_hz, 1000.0);
  EXPECT_NEAR(u.event->difference, 0.5, 1e-12);
  EXPECT_FALSE(u.state.armed);
  EXPECT_EQ(u.state.last_suggested, at_angle(kPi / 2));
}

TEST(Update, EventsEqualTrueToFalseTransitions) {
  Rng rng(31);
  AttentionConfig cfg;
  for (int run = 0; run < 50; ++run) {
    AttentionState st;
    bool prev_equal = true;
    int transitions = 0;
    int events = 0;
    const Vec7 active = rng.vec7();
    for (int i = 0; i < 300; ++i) {
      const Vec7 s = rng.uniform() > 0.3 ? active * rng.uniform(0.1, 2.0) : rng.vec7();
      const bool equal = adaptive_axes_nearly_equal(active, s, cfg.realtime_threshold);
      if (prev_equal && !equal) ++transitions;
      prev_equal = equal;
      const AttentionUpdate u = update(st, active, s, cfg);
      st = u.state;
      if (u.event) ++events;
    }
    EXPECT_EQ(events, transitions);
  }
}

TEST(AttentionConfig, Validation) {
  AttentionConfig cfg;
  cfg.realtime_threshold = 1.2;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.realtime_threshold = 0.0;
  EXPECT_NO_THROW(cfg.validate());
}

}  // namespace
}  // namespace admc
