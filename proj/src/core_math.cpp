#include "admc/core_math.hpp"

#include <algorithm>

#include "admc/error.hpp"

namespace admc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroDirection: return "ZeroDirection";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kFrameMismatch: return "FrameMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kDuplicateIndex: return "DuplicateIndex";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kMissingHeader: return "MissingHeader";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kProtocol: return "ProtocolError";
    case ErrorCode::kDisconnected: return "Disconnected";
  }
  return "Unknown";
}

Vec3 Vec3::normalized() const {
  const double n = norm();
  if (n == 0.0) return *this;
  return *this / n;
}

Rotation::Rotation(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n == 0.0 || !std::isfinite(n)) return;
  const double s = (w < 0.0 ? -1.0 : 1.0) / n;
  w_ = w * s;
  x_ = x * s;
  y_ = y * s;
  z_ = z * s;
}

Rotation Rotation::from_components(double w, double x, double y, double z) {
  const double n2 = w * w + x * x + y * y + z * z;
  if (w >= 0.0 && std::abs(n2 - 1.0) < 1e-12) {
    Rotation r;
    r.w_ = w;
    r.x_ = x;
    r.y_ = y;
    r.z_ = z;
    return r;
  }
  return {w, x, y, z};
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = axis.normalized();
  const double h = 0.5 * angle;
  const double s = std::sin(h);
  return {std::cos(h), a.x * s, a.y * s, a.z * s};
}

Rotation Rotation::from_rotation_vector(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-12) {
    // first-order expansion; normalization in the constructor fixes |q|
    return {1.0, 0.5 * v.x, 0.5 * v.y, 0.5 * v.z};
  }
  return from_axis_angle(v / angle, angle);
}

Vec3 Rotation::apply(const Vec3& v) const {
  const Vec3 q{x_, y_, z_};
  const Vec3 t = q.cross(v) * 2.0;
  return v + t * w_ + q.cross(t);
}

Rotation Rotation::inverse() const { return {w_, -x_, -y_, -z_}; }

Rotation Rotation::operator*(const Rotation& o) const {
  return {w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
          w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
          w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
          w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_};
}

Vec3 Rotation::rotation_vector() const {
  const Vec3 q{x_, y_, z_};
  const double s = q.norm();
  if (s < 1e-12) return q * (2.0 / w_);
  const double angle = 2.0 * std::atan2(s, w_);
  return q * (angle / s);
}

double Rotation::angle() const {
  return 2.0 * std::atan2(Vec3{x_, y_, z_}.norm(), w_);
}

Rotation Rotation::scaled(double fraction) const {
  return from_rotation_vector(rotation_vector() * fraction);
}

double angular_distance(const Rotation& a, const Rotation& b) {
  return (a.inverse() * b).angle();
}

Pose compose(const Pose& parent, const Pose& relative) {
  if (parent.frame != Frame::World || relative.frame != Frame::Gripper) {
    throw Error(ErrorCode::kFrameMismatch,
                "compose expects a World parent and a Gripper-relative child");
  }
  return {parent.position + parent.orientation.apply(relative.position),
          parent.orientation * relative.orientation, Frame::World};
}

Pose relative_to(const Pose& parent, const Pose& child) {
  if (parent.frame != Frame::World || child.frame != Frame::World) {
    throw Error(ErrorCode::kFrameMismatch, "relative_to expects two World poses");
  }
  const Rotation inv = parent.orientation.inverse();
  return {inv.apply(child.position - parent.position), inv * child.orientation,
          Frame::Gripper};
}

Rotation rotation_from_forward(const Vec3& dir) {
  const double n = dir.norm();
  if (!(n > 1e-9)) {
    throw Error(ErrorCode::kZeroDirection, "rotation_from_forward: zero direction");
  }
  const Vec3 d = dir / n;
  const double yaw = std::atan2(d.y, d.x);
  const double elevation = std::atan2(d.z, std::hypot(d.x, d.y));
  // positive rotation about +Y tips +X towards -Z, hence the sign
  return Rotation::yaw(yaw) * Rotation::pitch(-elevation);
}

Vec7 Vec7::operator+(const Vec7& o) const {
  Vec7 r;
  for (std::size_t i = 0; i < kSize; ++i) r.v[i] = v[i] + o.v[i];
  return r;
}

Vec7 Vec7::operator*(double s) const {
  Vec7 r;
  for (std::size_t i = 0; i < kSize; ++i) r.v[i] = v[i] * s;
  return r;
}

double Vec7::dot(const Vec7& o) const {
  double s = 0.0;
  for (std::size_t i = 0; i < kSize; ++i) s += v[i] * o.v[i];
  return s;
}

bool Vec7::is_zero() const {
  return std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; });
}

int Vec7::nonzero_count(double eps) const {
  return static_cast<int>(
      std::count_if(v.begin(), v.end(), [eps](double c) { return std::abs(c) > eps; }));
}

double cosine_similarity(const Vec7& a, const Vec7& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::kZeroVector, "cosine_similarity: zero-length vector");
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double difference(const Vec7& a, const Vec7& b) {
  return 1.0 - (cosine_similarity(a, b) + 1.0) / 2.0;
}

}  // namespace admc
