#include "admc/attention.hpp"

#include "admc/error.hpp"

namespace admc {

std::string_view to_string(AttentionMode mode) {
  return mode == AttentionMode::Continuous ? "Continuous" : "Threshold";
}

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::Visual: return "Visual";
    case Channel::Audio: return "Audio";
    case Channel::Haptic: return "Haptic";
  }
  return "?";
}

void AttentionConfig::validate() const {
  if (!(realtime_threshold >= 0.0 && realtime_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "realtime_threshold must lie in [0, 1]");
  }
}

bool adaptive_axes_nearly_equal(const Vec7& a, const Vec7& b, double threshold) {
  const bool za = a.is_zero();
  const bool zb = b.is_zero();
  if (za || zb) return za && zb;
  // cosine spans [-1, 1], twice the range of the difference value
  return std::abs(cosine_similarity(a, b) - 1.0) < 2.0 * threshold;
}

AttentionUpdate update(const AttentionState& state, const Vec7& active,
                       const Vec7& suggested, const AttentionConfig& cfg) {
  AttentionUpdate out{state, std::nullopt};
  out.state.last_active = active;
  out.state.last_suggested = suggested;
  if (cfg.mode == AttentionMode::Continuous) return out;

  const bool equal = adaptive_axes_nearly_equal(active, suggested, cfg.realtime_threshold);
  if (equal) {
    out.state.armed = true;
  } else if (state.armed) {
    out.state.armed = false;
    Notification n;
    n.channels = cfg.channels;
    n.difference = (active.is_zero() || suggested.is_zero()) ? 1.0 : difference(active, suggested);
    out.event = n;
  }
  return out;
}

}  // namespace admc
