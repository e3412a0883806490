#include <numbers>
#include <sstream>

#include "doctest.h"
#include "oad/motionfeat/features.hpp"
#include "support/generators.hpp"

using namespace oad;
using namespace oad::testing;

namespace {

struct Clip {
  std::vector<JointPositions> joints;
  GlobalTrajectory traj;
};

Clip random_clip(Rng& rng, std::size_t frames, std::size_t k) {
  Clip c;
  double heading = rng.uniform(-3.0, 3.0);
  Vec3 root(rng.normal(), 0.9, rng.normal());
  for (std::size_t t = 0; t < frames; ++t) {
    heading += rng.uniform(-0.3, 0.3);
    root += Vec3(rng.normal(0.0, 0.05), rng.normal(0.0, 0.01), rng.normal(0.0, 0.05));
    c.traj.translations.push_back(root);
    c.traj.rotations.push_back(Rotation::about_y(heading) *
                               Rotation::from_axis_angle(Vec3::UnitX(), rng.uniform(-0.4, 0.4)));
    JointPositions p{root};
    for (std::size_t j = 1; j < k; ++j) p.push_back(root + Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.3);
    c.joints.push_back(p);
  }
  return c;
}

Clip transformed(const Clip& c, const Rotation& r, const Vec3& shift) {
  Clip out = c;
  for (auto& frame : out.joints)
    for (auto& p : frame) p = r * p + shift;
  for (auto& t : out.traj.translations) t = r * t + shift;
  for (auto& q : out.traj.rotations) q = r * q;
  return out;
}

}  // namespace

TEST_CASE("finite_difference exactness on polynomials") {
  Matrix constant = Matrix::Constant(6, 2, 3.5);
  CHECK(finite_difference(constant, 1).isZero(0.0));
  CHECK(finite_difference(constant, 2).isZero(0.0));

  Matrix ramp(7, 1), quad(7, 1);
  for (int t = 0; t < 7; ++t) {
    ramp(t, 0) = 2.0 * t + 1.0;
    quad(t, 0) = double(t) * t;
  }
  const Matrix d1 = finite_difference(ramp, 1);
  REQUIRE(d1.rows() == 5);
  CHECK((d1.array() == 2.0).all());
  CHECK(finite_difference(ramp, 2).isZero(0.0));
  const Matrix q2 = finite_difference(quad, 2);
  REQUIRE(q2.rows() == 5);
  CHECK((q2.array() == 2.0).all());

  CHECK(thrown_code([] { finite_difference(Matrix::Zero(2, 3), 1); }) == ErrorCode::kInsufficientData);
  CHECK(thrown_code([] { finite_difference(Matrix::Zero(5, 3), 3); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("finite_difference is linear") {
  Rng rng(3);
  // Small integers and power-of-two weights keep every step exact.
  Matrix x(9, 4), y(9, 4);
  for (int i = 0; i < x.size(); ++i) {
    x(i) = double(int(rng.index(200)) - 100);
    y(i) = double(int(rng.index(200)) - 100);
  }
  for (int order : {1, 2}) {
    const Matrix lhs = finite_difference(4.0 * x - 0.5 * y, order);
    const Matrix rhs = 4.0 * finite_difference(x, order) - 0.5 * finite_difference(y, order);
    CHECK(lhs == rhs);
  }
  Matrix u = Matrix::Random(11, 3), v = Matrix::Random(11, 3);
  for (int order : {1, 2}) {
    const Matrix lhs = finite_difference(0.3 * u + 1.7 * v, order);
    const Matrix rhs = 0.3 * finite_difference(u, order) + 1.7 * finite_difference(v, order);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("layout widths") {
  const FeatureLayout l = FeatureLayout::standard(16);
  CHECK(l.width() == 1 + 3 + 1 + 3 * 15 + 3 * 16 + 3 * 16);
  CHECK(l.offset("root_height") == 4);
  CHECK(l.offset("joint_positions") == 5);
  CHECK(l.offset("joint_accelerations") == 5 + 45 + 48);
  const FeatureLayout no_acc = FeatureLayout::standard(16, false);
  CHECK(no_acc.width() == l.width() - 48);
  CHECK_FALSE(no_acc.has("joint_accelerations"));
  CHECK(thrown_code([&] { no_acc.offset("joint_accelerations"); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("stationary rest pose") {
  const SkeletonTemplate s = humanoid_template(false);
  const auto rest = forward_kinematics(s, PoseParams::identity(s.joint_count()), Vec3(0.0, 0.93, 0.0));
  const std::vector<JointPositions> joints(5, rest);
  GlobalTrajectory traj{std::vector<Vec3>(5, Vec3(0.0, 0.93, 0.0)), std::vector<Rotation>(5)};
  const MotionSequence m = extract_features(joints, traj, 30.0);
  REQUIRE(m.frame_count() == 3);
  REQUIRE(m.dim() == FeatureLayout::standard(16).width());
  const std::size_t k = s.joint_count();
  const std::size_t pos = m.layout.offset("joint_positions");
  for (Eigen::Index r = 0; r < 3; ++r) {
    CHECK(m.frames(r, 0) == 0.0);
    CHECK(m.frames.block(r, 1, 1, 3).isZero(0.0));
    CHECK(m.frames(r, 4) == 0.93);
    CHECK(m.frames.block(r, m.layout.offset("joint_velocities"), 1, 6 * k).isZero(0.0));
    for (std::size_t j = 1; j < k; ++j) {
      const Vec3 got = m.frames.block<1, 3>(r, Eigen::Index(pos + 3 * (j - 1))).transpose();
      CHECK((got - (rest[j] - rest[0])).norm() < 1e-15);
    }
  }
}

TEST_CASE("uniform forward translation") {
  Rng rng(4);
  Clip c;
  JointPositions body;
  for (int j = 0; j < 5; ++j) body.emplace_back(rng.normal(), rng.normal(), rng.normal());
  for (int t = 0; t < 8; ++t) {
    const Vec3 shift(0.0, 0.0, 0.1 * t);
    JointPositions p = body;
    for (auto& q : p) q += shift;
    c.joints.push_back(p);
    c.traj.translations.push_back(body[0] + shift);
    c.traj.rotations.emplace_back();
  }
  const MotionSequence m = extract_features(c.joints, c.traj, 30.0);
  const std::size_t vel = m.layout.offset("joint_velocities");
  const std::size_t acc = m.layout.offset("joint_accelerations");
  for (Eigen::Index r = 0; r < m.frames.rows(); ++r) {
    CHECK((m.frames.block<1, 3>(r, 1).transpose() - Vec3(0.0, 0.0, 0.1)).norm() < 1e-12);
    for (std::size_t j = 0; j < 5; ++j)
      CHECK((m.frames.block<1, 3>(r, Eigen::Index(vel + 3 * j)).transpose() - Vec3(0.0, 0.0, 0.1)).norm() < 1e-12);
    CHECK(m.frames.block(r, acc, 1, 15).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sinusoidal joint matches the analytic derivative") {
  const double amplitude = 0.2;
  for (double omega : {0.05, 0.2, 0.5}) {
    Clip c;
    for (int t = 0; t < 40; ++t) {
      c.joints.push_back({Vec3::Zero(), Vec3(amplitude * std::sin(omega * t), 0.5, 0.0)});
      c.traj.translations.push_back(Vec3::Zero());
      c.traj.rotations.emplace_back();
    }
    const MotionSequence m = extract_features(c.joints, c.traj, 30.0);
    const std::size_t vel = m.layout.offset("joint_velocities") + 3;
    const std::size_t acc = m.layout.offset("joint_accelerations") + 3;
    const double tol = 10.0 * omega * omega * amplitude;
    for (Eigen::Index r = 0; r < m.frames.rows(); ++r) {
      const double t = double(r + 1);
      CHECK(std::abs(m.frames(r, Eigen::Index(vel)) - amplitude * omega * std::cos(omega * t)) < tol);
      CHECK(std::abs(m.frames(r, Eigen::Index(acc)) + amplitude * omega * omega * std::sin(omega * t)) < tol);
    }
  }
}

TEST_CASE("root angular velocity across the heading seam") {
  Clip c;
  for (int t = 0; t < 6; ++t) {
    c.joints.push_back({Vec3::Zero()});
    c.traj.translations.push_back(Vec3::Zero());
    c.traj.rotations.push_back(Rotation::about_y(std::numbers::pi - 0.25 + 0.1 * t));
  }
  const MotionSequence m = extract_features(c.joints, c.traj, 30.0);
  for (Eigen::Index r = 0; r < m.frames.rows(); ++r) CHECK(m.frames(r, 0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("features are invariant to global yaw and horizontal shift") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Clip c = random_clip(rng, 12, 1 + rng.index(8));
    const Matrix base = extract_features(c.joints, c.traj, 30.0).frames;
    const Rotation yaw = Rotation::about_y(rng.uniform(-3.0, 3.0));
    const Matrix rotated = extract_features(transformed(c, yaw, Vec3::Zero()).joints,
                                            transformed(c, yaw, Vec3::Zero()).traj, 30.0)
                               .frames;
    CHECK((rotated - base).cwiseAbs().maxCoeff() < 1e-9);
    const Vec3 shift(rng.normal(0.0, 5.0), 0.0, rng.normal(0.0, 5.0));
    const Clip moved = transformed(c, Rotation(), shift);
    CHECK((extract_features(moved.joints, moved.traj, 30.0).frames - base).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("feature extraction errors") {
  Rng rng(2);
  const Clip c = random_clip(rng, 4, 3);
  GlobalTrajectory short_traj = c.traj;
  short_traj.translations.pop_back();
  short_traj.rotations.pop_back();
  CHECK(thrown_code([&] { extract_features(c.joints, short_traj, 30.0); }) == ErrorCode::kDimension);
  const std::vector<JointPositions> two(c.joints.begin(), c.joints.begin() + 2);
  GlobalTrajectory two_traj{{c.traj.translations[0], c.traj.translations[1]}, {c.traj.rotations[0], c.traj.rotations[1]}};
  CHECK(thrown_code([&] { extract_features(two, two_traj, 30.0); }) == ErrorCode::kInsufficientData);
}

TEST_CASE("motion file round trip") {
  Rng rng(8);
  const Clip c = random_clip(rng, 10, 4);
  const MotionSequence m = extract_features(c.joints, c.traj, 25.0, {.with_acceleration = false});
  std::stringstream buf;
  write_motion(buf, m);
  const MotionSequence back = read_motion(buf);
  CHECK(back.fps == 25.0);
  CHECK(back.layout == m.layout);
  CHECK(back.frames == m.frames);
  back.validate();
  std::stringstream bad("{\"dp\":3,\"fps\":30,\"layout\":[{\"name\":\"a\",\"width\":2}]}\n");
  CHECK(thrown_code([&] { read_motion(bad); }) == ErrorCode::kParse);
}
