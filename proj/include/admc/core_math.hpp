/**
 * @file core_math.hpp
 * @brief Frame-aware vector and rotation algebra plus the axis similarity
 *        measures used by the shared-control layer.
 *
 * Conventions: the world frame is X forward, Y right, Z up (left-handed, as
 * in the engine this control scheme was first built for); rotations are unit
 * quaternions composed with the Hamilton product and applied actively.
 * Roll, pitch and yaw are rotations about the local X, Y and Z axes.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace admc {

constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  /// Unit vector in the same direction; the zero vector maps to itself.
  Vec3 normalized() const;
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Unit quaternion. Kept on the w >= 0 half of the double cover.
class Rotation {
 public:
  constexpr Rotation() = default;
  /// Normalizes the given quaternion; a zero quaternion yields identity.
  Rotation(double w, double x, double y, double z);

  static Rotation identity() { return {}; }
  /// Keeps the components bit-for-bit when they already form a unit
  /// quaternion with w >= 0 (within 1e-12); normalizes otherwise.
  static Rotation from_components(double w, double x, double y, double z);
  static Rotation from_axis_angle(const Vec3& axis, double angle);
  /// Exponential map: axis * angle to rotation.
  static Rotation from_rotation_vector(const Vec3& v);
  static Rotation yaw(double angle) { return from_axis_angle({0, 0, 1}, angle); }
  static Rotation pitch(double angle) { return from_axis_angle({0, 1, 0}, angle); }
  static Rotation roll(double angle) { return from_axis_angle({1, 0, 0}, angle); }

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  Vec3 apply(const Vec3& v) const;
  Rotation inverse() const;
  /// Hamilton product: (a * b).apply(v) == a.apply(b.apply(v)).
  Rotation operator*(const Rotation& o) const;
  bool operator==(const Rotation&) const = default;

  /// Logarithmic map, the inverse of from_rotation_vector. Angle in [0, pi].
  Vec3 rotation_vector() const;
  double angle() const;
  /// Same axis, angle multiplied by `fraction`.
  Rotation scaled(double fraction) const;

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// Angle of the relative rotation between a and b, in [0, pi].
double angular_distance(const Rotation& a, const Rotation& b);

enum class Frame { World, Gripper };

struct Pose {
  Vec3 position;
  Rotation orientation;
  Frame frame = Frame::World;

  bool operator==(const Pose&) const = default;
};

/// parent (World) composed with a pose expressed in the parent's gripper frame.
Pose compose(const Pose& parent, const Pose& relative);
/// Pose of `child` (World) expressed in the gripper frame of `parent` (World).
Pose relative_to(const Pose& parent, const Pose& child);

/// Rotation that turns the forward axis (+X) onto `dir`, with zero roll.
/// Throws Error(kZeroDirection) when |dir| <= 1e-9.
Rotation rotation_from_forward(const Vec3& dir);

inline Vec3 to_gripper_frame(const Vec3& v, const Rotation& gripper) {
  return gripper.inverse().apply(v);
}
inline Vec3 to_world_frame(const Vec3& v, const Rotation& gripper) {
  return gripper.apply(v);
}

/// Seven cardinal DoFs in the order (tx, ty, tz, roll, pitch, yaw, gripper).
struct Vec7 {
  static constexpr std::size_t kSize = 7;
  std::array<double, kSize> v{};

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  bool operator==(const Vec7&) const = default;

  Vec7 operator+(const Vec7& o) const;
  Vec7 operator*(double s) const;
  Vec7 operator-() const { return *this * -1.0; }

  double dot(const Vec7& o) const;
  double norm() const { return std::sqrt(dot(*this)); }
  bool is_zero() const;
  /// Number of components with magnitude above `eps`.
  int nonzero_count(double eps = 1e-9) const;

  static Vec7 unit(std::size_t i) {
    Vec7 r;
    r.v[i] = 1.0;
    return r;
  }
};

/// sum(a_i b_i) / (|a| |b|), clamped to [-1, 1]. Throws Error(kZeroVector).
double cosine_similarity(const Vec7& a, const Vec7& b);

/// d = 1 - (cos(a, b) + 1) / 2, in [0, 1]. Throws Error(kZeroVector).
double difference(const Vec7& a, const Vec7& b);

}  // namespace admc
