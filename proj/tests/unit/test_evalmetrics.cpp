#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "doctest.h"
#include "oad/evalmetrics/alignment.hpp"
#include "oad/evalmetrics/classification.hpp"
#include "oad/evalmetrics/losses.hpp"
#include "support/generators.hpp"

using namespace oad;
using namespace oad::testing;

namespace {

PointSet random_points(Rng& rng, std::size_t n, double sd = 1.0) {
  PointSet p;
  for (std::size_t i = 0; i < n; ++i) p.emplace_back(rng.normal(0.0, sd), rng.normal(0.0, sd), rng.normal(0.0, sd));
  return p;
}

SimilarityTransform random_similarity(Rng& rng) {
  return {std::exp(rng.uniform(-1.0, 1.0)), random_rotation(rng), Vec3(rng.normal(), rng.normal(), rng.normal()) * 3.0};
}

/// Best scale and translation for a fixed rotation, by normal equations.
double residual_for_rotation(const Rotation& r, const PointSet& x, const PointSet& y) {
  const double n = double(x.size());
  Vec3 mx = Vec3::Zero(), my = Vec3::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += r * x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (r * x[i] - mx).dot(y[i] - my);
    den += (r * x[i] - mx).squaredNorm();
  }
  const double s = std::max(num / den, 0.0);
  double res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) res += (s * (r * x[i] - mx) - (y[i] - my)).squaredNorm();
  return res;
}

/// Dense rotation-vector grid followed by shrinking random local search.
double brute_force_residual(const PointSet& x, const PointSet& y, Rng& rng) {
  Vec3 best_v = Vec3::Zero();
  double best = residual_for_rotation(Rotation(), x, y);
  const int n = 24;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vec3 v = (Vec3(i, j, k) / double(n - 1) * 2.0 - Vec3::Ones()) * std::numbers::pi;
        if (v.norm() > std::numbers::pi) continue;
        const double r = residual_for_rotation(Rotation::from_rotation_vector(v), x, y);
        if (r < best) {
          best = r;
          best_v = v;
        }
      }
  for (double step = 0.2; step > 1e-10; step *= 0.7)
    for (int trial = 0; trial < 60; ++trial) {
      const Vec3 v = best_v + step * Vec3(rng.normal(), rng.normal(), rng.normal());
      const double r = residual_for_rotation(Rotation::from_rotation_vector(v), x, y);
      if (r < best) {
        best = r;
        best_v = v;
      }
    }
  return best;
}

}  // namespace

TEST_CASE("keypoint loss") {
  CHECK(keypoint_loss({Vec3(1, 2, 3)}, {Vec3(1, 2, 3)}) == 0.0);
  CHECK(keypoint_loss({Vec3(1, 1, 1)}, {Vec3::Zero()}) == 3.0);
  CHECK(std::abs(keypoint_loss({Vec3(1, 0, 0), Vec3(0, 2, 0)}, {Vec3::Zero(), Vec3::Zero()}) - 1.5) < 1e-12);
  Rng rng(40);
  const PointSet a = random_points(rng, 7), b = random_points(rng, 7);
  CHECK(keypoint_loss(a, b) == keypoint_loss(b, a));
  CHECK(thrown_code([&] { keypoint_loss(a, PointSet(3)); }) == ErrorCode::kDimension);
}

TEST_CASE("twist loss") {
  CHECK(twist_loss({{0.3, -1.0}}, {{0.3, -1.0}}) == 0.0);
  CHECK(std::abs(twist_loss({{0.0}}, {{std::numbers::pi}}) - 2.0) < 1e-12);
  CHECK(std::abs(twist_loss({{0.0}}, {{std::numbers::pi / 2}}) - std::sqrt(2.0)) < 1e-12);
  // Sign-sensitive, unlike the (cos, cos) form.
  CHECK(twist_loss({{0.5}}, {{-0.5}}) > 0.9);
  Rng rng(41);
  for (int i = 0; i < 100; ++i) {
    TwistAngles a{{rng.uniform(-3, 3), rng.uniform(-3, 3)}}, b{{rng.uniform(-3, 3), rng.uniform(-3, 3)}};
    TwistAngles shifted = a;
    shifted.angles[rng.index(2)] += 2.0 * std::numbers::pi;
    CHECK(std::abs(twist_loss(shifted, b) - twist_loss(a, b)) < 1e-12);
  }
  CHECK(thrown_code([] { twist_loss({{1.0}}, {{1.0, 2.0}}); }) == ErrorCode::kDimension);
}

TEST_CASE("SMPL parameter losses") {
  ShapeParams beta, beta_hat;
  const PoseParams theta = PoseParams::identity(3);
  SmplLoss l = smpl_param_loss(beta, beta_hat, theta, theta);
  CHECK(l.shape == 0.0);
  CHECK(l.pose == 0.0);
  beta_hat.coefficients[4] = 1.0;
  CHECK(smpl_param_loss(beta, beta_hat, theta, theta).shape == 1.0);
  PoseParams other = theta;
  other.rotations[0] = Rotation::from_axis_angle(Vec3::UnitX(), 0.1);
  other.rotations[2] = Rotation::from_axis_angle(Vec3::UnitZ(), 0.1);
  CHECK(std::abs(smpl_param_loss(beta, beta, theta, other).pose - std::sqrt(0.02)) < 1e-12);
  // Same rotation written with opposite quaternion sign.
  PoseParams flipped = other;
  const Rotation& r = other.rotations[0];
  flipped.rotations[0] = Rotation::from_wxyz(-r.w(), -r.x(), -r.y(), -r.z());
  CHECK(smpl_param_loss(beta, beta, other, flipped).pose < 1e-15);
}

TEST_CASE("procrustes recovers constructed transforms") {
  Rng rng(42);
  const PointSet x = random_points(rng, 10);
  const SimilarityTransform id = procrustes_align(x, x);
  CHECK(std::abs(id.scale - 1.0) < 1e-12);
  CHECK(distance(id.rotation, Rotation()) < 1e-12);
  CHECK(id.translation.norm() < 1e-12);

  const SimilarityTransform truth{2.0, Rotation::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 6),
                                  Vec3(1.0, 2.0, 3.0)};
  const SimilarityTransform got = procrustes_align(x, truth.apply(x));
  CHECK(std::abs(got.scale - 2.0) < 1e-9);
  CHECK(distance(got.rotation, truth.rotation) < 1e-9);
  CHECK((got.translation - truth.translation).norm() < 1e-9);

  for (int i = 0; i < 100; ++i) {
    const SimilarityTransform t = random_similarity(rng);
    const PointSet p = random_points(rng, 3 + rng.index(20));
    const SimilarityTransform g = procrustes_align(p, t.apply(p));
    CHECK(std::abs(g.scale - t.scale) < 1e-9);
    CHECK(distance(g.rotation, t.rotation) < 1e-9);
    CHECK((g.translation - t.translation).norm() < 1e-9);
  }
}

TEST_CASE("procrustes excludes reflections") {
  Rng rng(43);
  const PointSet x = random_points(rng, 8);
  PointSet mirrored = x;
  for (Vec3& p : mirrored) p.x() = -p.x();
  const SimilarityTransform t = procrustes_align(x, mirrored);
  CHECK(std::abs(t.rotation.matrix().determinant() - 1.0) < 1e-12);
  CHECK(t.scale > 0.0);
}

TEST_CASE("procrustes matches a brute-force minimum on noisy data") {
  Rng rng(44);
  for (int trial = 0; trial < 3; ++trial) {
    const PointSet x = random_points(rng, 4);
    PointSet y = random_similarity(rng).apply(x);
    for (Vec3& p : y) p += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.3;
    const double closed = alignment_residual(procrustes_align(x, y), x, y);
    CHECK(std::abs(closed - brute_force_residual(x, y, rng)) < 1e-6);
  }
}

TEST_CASE("procrustes optimality under small perturbations") {
  Rng rng(45);
  const PointSet x = random_points(rng, 9);
  PointSet y = random_similarity(rng).apply(x);
  for (Vec3& p : y) p += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.2;
  const SimilarityTransform best = procrustes_align(x, y);
  const double r0 = alignment_residual(best, x, y);
  for (int i = 0; i < 100; ++i) {
    SimilarityTransform t = best;
    t.scale *= std::exp(1e-3 * rng.normal());
    t.rotation = Rotation::from_rotation_vector(1e-3 * random_unit(rng)) * t.rotation;
    t.translation += 1e-3 * random_unit(rng);
    CHECK(alignment_residual(t, x, y) >= r0);
  }
}

TEST_CASE("procrustes degeneracy") {
  const PointSet line{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
  CHECK(thrown_code([&] { procrustes_align(line, line); }) == ErrorCode::kDegeneracy);
  const PointSet same(4, Vec3(1, 1, 1));
  CHECK(thrown_code([&] { procrustes_align(same, same); }) == ErrorCode::kDegeneracy);
  CHECK(thrown_code([&] { procrustes_align(line, PointSet(3)); }) == ErrorCode::kDimension);
  // Planar sets have rank-2 covariance and are fine.
  const PointSet plane{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  CHECK(procrustes_align(plane, plane).scale == doctest::Approx(1.0));
}

TEST_CASE("MPJPE modes") {
  Rng rng(46);
  const std::vector<JointPositions> gt{random_points(rng, 5), random_points(rng, 5)};
  for (MpjpeMode m : {MpjpeMode::kRaw, MpjpeMode::kRootAligned, MpjpeMode::kProcrustes})
    CHECK(mpjpe(gt, gt, m) < 1e-9);

  const std::vector<JointPositions> two{{Vec3(0, 0, 0), Vec3(1, 0, 0)}};
  const std::vector<JointPositions> shifted{{Vec3(0.01, 0, 0), Vec3(1.01, 0, 0)}};
  CHECK(std::abs(mpjpe(shifted, two, MpjpeMode::kRaw) - 10.0) < 1e-9);
  CHECK(mpjpe(shifted, two, MpjpeMode::kRootAligned) < 1e-12);

  std::vector<JointPositions> transformed;
  for (const auto& f : gt) transformed.push_back(random_similarity(rng).apply(f));
  CHECK(mpjpe(transformed, gt, MpjpeMode::kProcrustes) < 1e-6);
  CHECK(mpjpe(transformed, gt, MpjpeMode::kRootAligned) > 0.0);
  CHECK(thrown_code([&] { mpjpe(gt, {gt[0]}); }) == ErrorCode::kDimension);
}

TEST_CASE("MPJPE ordering on perturbed poses") {
  Rng rng(47);
  const SkeletonTemplate s = humanoid_template(false);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<JointPositions> gt, pred;
    for (int f = 0; f < 4; ++f) {
      const PoseParams pose = random_pose(rng, s.joint_count());
      gt.push_back(forward_kinematics(s, pose));
      JointPositions p = gt.back();
      for (Vec3& v : p) v += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.02 + Vec3(0.1, 0.0, 0.0);
      pred.push_back(p);
    }
    const double pa = mpjpe(pred, gt, MpjpeMode::kProcrustes);
    const double ra = mpjpe(pred, gt, MpjpeMode::kRootAligned);
    CHECK(pa <= ra);
    CHECK(ra <= mpjpe(pred, gt, MpjpeMode::kRaw) + 1000.0 * 0.1 + 1e-9);
  }
}

TEST_CASE("MPVPE") {
  const SkeletonTemplate s = humanoid_template(true);
  const PoseParams pose = PoseParams::identity(s.joint_count());
  const ShapeParams beta;
  const VertexPositions v = linear_blend_skin(s, pose, beta);
  const Vec3 root = s.rest_offset(0);
  CHECK(mpvpe({v}, {v}, {root}, {root}) == 0.0);
  VertexPositions off = v;
  for (Vec3& p : off) p += Vec3(0.0, 0.005, 0.0);
  CHECK(std::abs(mpvpe({off}, {v}, {root}, {root}) - 5.0) < 1e-9);
  // Moving the whole body with its root cancels.
  VertexPositions moved = v;
  for (Vec3& p : moved) p += Vec3(1.0, 0.0, 0.0);
  CHECK(mpvpe({moved}, {v}, {root + Vec3(1.0, 0.0, 0.0)}, {root}) < 1e-9);

  // Bend one elbow and compare with a direct per-vertex mean.
  PoseParams bent = pose;
  bent.rotations[humanoid::kLeftWrist] = Rotation::from_axis_angle(Vec3::UnitX(), 0.4);
  const VertexPositions b = linear_blend_skin(s, bent, beta);
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) sum += (b[i] - v[i]).norm();
  CHECK(std::abs(mpvpe({b}, {v}, {root}, {root}) - 1000.0 * sum / double(v.size())) < 1e-9);
  CHECK(thrown_code([&] { mpvpe({v}, {v}, {root}, {}); }) == ErrorCode::kDimension);
}

TEST_CASE("classification report hand cases") {
  const std::vector<std::string> order{"abnormal", "normal"};
  SUBCASE("perfect") {
    const std::vector<std::string> y{"normal", "abnormal", "normal"};
    const auto r = classification_report(y, y, order);
    CHECK(r.accuracy == 1.0);
    for (const auto& c : r.classes) {
      CHECK(c.precision == 1.0);
      CHECK(c.recall == 1.0);
      CHECK(c.f1 == 1.0);
    }
    CHECK(r.macro.f1 == 1.0);
    CHECK(r.weighted.f1 == 1.0);
  }
  SUBCASE("binary confusion 80/20/10/90") {
    std::vector<std::string> truth, pred;
    auto add = [&](const char* t, const char* p, int n) {
      for (int i = 0; i < n; ++i) {
        truth.push_back(t);
        pred.push_back(p);
      }
    };
    add("abnormal", "abnormal", 80);
    add("abnormal", "normal", 20);
    add("normal", "abnormal", 10);
    add("normal", "normal", 90);
    const auto r = classification_report(truth, pred, order);
    const ClassMetrics& pos = r.classes[0];
    CHECK(std::abs(pos.precision - 8.0 / 9.0) < 1e-12);
    CHECK(std::abs(pos.recall - 0.8) < 1e-12);
    CHECK(std::abs(pos.f1 - 2.0 * (8.0 / 9.0) * 0.8 / (8.0 / 9.0 + 0.8)) < 1e-12);
    CHECK(std::abs(pos.f1 - 0.8421052631578947) < 1e-12);
    CHECK(std::abs(r.accuracy - 0.85) < 1e-12);
    CHECK(r.confusion[0][1] == 20);
    CHECK(pos.support == 100);
  }
  SUBCASE("macro and weighted averages") {
    const std::vector<double> f1{0.9, 0.5}, support{30.0, 10.0};
    CHECK(std::abs(macro_average(f1) - 0.7) < 1e-12);
    CHECK(std::abs(weighted_average(f1, support) - 0.8) < 1e-12);
  }
  SUBCASE("zero division and zero support") {
    const std::vector<std::string> truth{"normal", "normal"}, pred{"normal", "normal"};
    const auto r = classification_report(truth, pred, order);
    CHECK(r.classes[0].zero_support);
    CHECK(r.classes[0].precision == 0.0);
    CHECK(r.classes[0].f1 == 0.0);
    CHECK(r.macro.recall == 0.5);
    CHECK(r.weighted.recall == 1.0);
  }
  SUBCASE("errors and output") {
    const std::vector<std::string> a{"normal"}, b{"sideways"};
    CHECK(thrown_code([&] { classification_report(a, b, order); }) == ErrorCode::kLabel);
    const std::vector<std::string> two{"normal", "abnormal"};
    CHECK(thrown_code([&] { classification_report(a, two, order); }) == ErrorCode::kDimension);
    const auto r = classification_report(two, two, order);
    CHECK(r.to_json().at("accuracy") == 1.0);
    CHECK(r.to_text().find("weighted avg") != std::string::npos);
  }
}

TEST_CASE("weighted recall equals accuracy") {
  Rng rng(48);
  const std::vector<std::string> order{"a", "b", "c", "d"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> truth, pred;
    for (std::size_t i = 0, n = 1 + rng.index(60); i < n; ++i) {
      truth.push_back(order[rng.index(4)]);
      pred.push_back(order[rng.index(4)]);
    }
    const auto r = classification_report(truth, pred, order);
    CHECK(std::abs(r.weighted.recall - r.accuracy) < 1e-12);
    for (const auto& c : r.classes) {
      CHECK(c.precision >= 0.0);
      CHECK(c.precision <= 1.0);
      CHECK(c.f1 <= 1.0);
    }
  }
}
