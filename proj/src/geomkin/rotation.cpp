#include "oad/geomkin/rotation.hpp"

#include <cmath>
#include <numbers>

#include "oad/core/error.hpp"

namespace oad {

Eigen::Quaterniond Rotation::canonical(Eigen::Quaterniond q) {
  const double n = q.norm();
  if (!std::isfinite(n) || n == 0.0) fail(ErrorCode::kInvalidInput, "quaternion must be finite and nonzero");
  q.coeffs() /= n;
  bool flip = q.w() < 0.0;
  if (q.w() == 0.0) {
    const double lead = q.x() != 0.0 ? q.x() : (q.y() != 0.0 ? q.y() : q.z());
    flip = lead < 0.0;
  }
  if (flip) q.coeffs() = -q.coeffs();
  return q;
}

Rotation Rotation::from_wxyz(double w, double x, double y, double z) {
  return Rotation(canonical(Eigen::Quaterniond(w, x, y, z)));
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) { return Rotation(canonical(q)); }

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(angle)) fail(ErrorCode::kInvalidInput, "axis must be nonzero and angle finite");
  const Vec3 u = axis / n;
  const double s = std::sin(0.5 * angle);
  return from_wxyz(std::cos(0.5 * angle), s * u.x(), s * u.y(), s * u.z());
}

Rotation Rotation::from_rotation_vector(const Vec3& v) {
  const double angle = v.norm();
  if (angle == 0.0) return Rotation();
  return from_axis_angle(v, angle);
}

Rotation Rotation::from_matrix(const Mat3& m) { return Rotation(canonical(Eigen::Quaterniond(m))); }

Rotation Rotation::about_y(double angle) {
  return from_wxyz(std::cos(0.5 * angle), 0.0, std::sin(0.5 * angle), 0.0);
}

Rotation Rotation::between(const Vec3& from, const Vec3& to) {
  const double nf = from.norm();
  const double nt = to.norm();
  if (!(nf > 0.0) || !(nt > 0.0)) fail(ErrorCode::kInvalidInput, "between() needs nonzero directions");
  const Vec3 a = from / nf;
  const Vec3 b = to / nt;
  const double d = a.dot(b);
  if (d < -1.0 + 1e-9) {
    Vec3 axis = a.cross(Vec3::UnitX());
    if (axis.norm() < 1e-6) axis = a.cross(Vec3::UnitY());
    return from_axis_angle(axis, std::numbers::pi);
  }
  // Half-way quaternion: (1 + a.b, a x b) normalized.
  const Vec3 c = a.cross(b);
  return from_wxyz(1.0 + d, c.x(), c.y(), c.z());
}

Rotation Rotation::operator*(const Rotation& rhs) const { return Rotation(canonical(q_ * rhs.q_)); }

Rotation Rotation::inverse() const { return Rotation(canonical(q_.conjugate())); }

double Rotation::angle() const {
  const double vn = q_.vec().norm();
  return 2.0 * std::atan2(vn, std::abs(q_.w()));
}

Vec3 Rotation::log() const {
  const double vn = q_.vec().norm();
  if (vn == 0.0) return Vec3::Zero();
  return q_.vec() / vn * angle();
}

double distance(const Rotation& a, const Rotation& b) {
  const auto& qa = a.quaternion().coeffs();
  const auto& qb = b.quaternion().coeffs();
  return std::min((qa - qb).norm(), (qa + qb).norm());
}

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(angle, kTwoPi);
  if (r > std::numbers::pi) r -= kTwoPi;
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

}  // namespace oad
