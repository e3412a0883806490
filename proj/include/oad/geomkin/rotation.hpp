#pragma once

#include <Eigen/Geometry>

#include "oad/core/types.hpp"

namespace oad {

/// Unit quaternion rotation, scalar first, canonicalized to w >= 0.
///
/// Every factory and every composition renormalizes and canonicalizes, so
/// two Rotation values describing the same rotation compare equal up to
/// rounding. When w == 0 exactly, the first nonzero vector component is made
/// positive.
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}

  /// Throws kInvalidInput for non-finite or zero-norm input.
  static Rotation from_wxyz(double w, double x, double y, double z);
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  /// `axis` need not be unit length but must be nonzero.
  static Rotation from_axis_angle(const Vec3& axis, double angle);
  /// Inverse of log(): rotation of |v| radians about v.
  static Rotation from_rotation_vector(const Vec3& v);
  static Rotation from_matrix(const Mat3& m);
  /// Rotation about the vertical +y axis (heading / yaw).
  static Rotation about_y(double angle);

  /// Minimal-angle rotation taking direction `from` onto direction `to`.
  /// Antiparallel inputs rotate by pi about from x (+x), or from x (+y) when
  /// `from` is itself along x.
  static Rotation between(const Vec3& from, const Vec3& to);

  Rotation operator*(const Rotation& rhs) const;
  Vec3 operator*(const Vec3& v) const { return q_ * v; }
  Rotation inverse() const;

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  /// Rotation vector (axis * angle), angle in [0, pi].
  Vec3 log() const;
  double angle() const;

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }

 private:
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) {}
  static Eigen::Quaterniond canonical(Eigen::Quaterniond q);

  Eigen::Quaterniond q_;
};

/// Sign-invariant quaternion distance min(|a - b|, |a + b|).
double distance(const Rotation& a, const Rotation& b);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

}  // namespace oad
