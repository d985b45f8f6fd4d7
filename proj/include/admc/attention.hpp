/**
 * @file attention.hpp
 * @brief Decides when a new suggestion is announced to the operator.
 *
 * In Threshold mode a notification fires once when the top suggestion stops
 * being nearly equal to the active mapping, then stays disarmed until the two
 * are nearly equal again. Holding the input still at the boundary therefore
 * cannot retrigger it.
 */

#pragma once

#include <optional>
#include <set>
#include <string_view>

#include "admc/core_math.hpp"

namespace admc {

enum class AttentionMode { Continuous, Threshold };
enum class Channel { Visual, Audio, Haptic };

std::string_view to_string(AttentionMode mode);
std::string_view to_string(Channel channel);

struct AttentionConfig {
  AttentionMode mode = AttentionMode::Threshold;
  double realtime_threshold = 0.2;
  std::set<Channel> channels{Channel::Visual, Channel::Audio, Channel::Haptic};

  /// Throws Error(kInvalidConfig) if the threshold is outside [0, 1].
  void validate() const;
};

struct AttentionState {
  bool armed = true;
  Vec7 last_active;
  Vec7 last_suggested;
};

struct Notification {
  std::set<Channel> channels;
  double tone_hz = 1000.0;
  double difference = 0.0;  ///< difference that broke the threshold
};

/// |cos(a, b) - 1| < 2 * threshold, i.e. difference(a, b) < threshold.
/// Two zero vectors are equal; a zero and a nonzero vector are not.
bool adaptive_axes_nearly_equal(const Vec7& a, const Vec7& b, double threshold);

struct AttentionUpdate {
  AttentionState state;
  std::optional<Notification> event;
};

AttentionUpdate update(const AttentionState& state, const Vec7& active,
                       const Vec7& suggested, const AttentionConfig& cfg);

}  // namespace admc
