#pragma once

// Seeded generators and assertion helpers shared by the unit and acceptance
// suites.

#include <cmath>
#include <functional>
#include <numbers>

#include "oad/core/error.hpp"
#include "oad/core/rng.hpp"
#include "oad/geomkin/kinematics.hpp"

namespace oad::testing {

inline Rotation random_rotation(Rng& rng) {
  for (;;) {
    const double w = rng.normal(), x = rng.normal(), y = rng.normal(), z = rng.normal();
    if (w * w + x * x + y * y + z * z > 1e-6) return Rotation::from_wxyz(w, x, y, z);
  }
}

inline Vec3 random_unit(Rng& rng) {
  for (;;) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    if (v.norm() > 1e-6) return v.normalized();
  }
}

/// Random tree with 2..max_joints joints, bone lengths in [0.05, 0.5] m.
inline SkeletonTemplate random_skeleton(Rng& rng, std::size_t max_joints = 20) {
  const std::size_t k = 2 + rng.index(max_joints - 1);
  std::vector<int> parents(k, -1);
  PointSet offsets(k, Vec3::Zero());
  for (std::size_t j = 1; j < k; ++j) {
    parents[j] = static_cast<int>(rng.index(j));
    offsets[j] = random_unit(rng) * rng.uniform(0.05, 0.5);
  }
  return SkeletonTemplate(std::move(parents), std::move(offsets));
}

/// Straight chain of `k` joints along +x with unit-ish bones.
inline SkeletonTemplate chain_skeleton(std::size_t k, const Vec3& offset = Vec3::UnitX()) {
  std::vector<int> parents(k);
  PointSet offsets(k, offset);
  parents[0] = -1;
  offsets[0] = Vec3::Zero();
  for (std::size_t j = 1; j < k; ++j) parents[j] = static_cast<int>(j) - 1;
  return SkeletonTemplate(std::move(parents), std::move(offsets));
}

inline PoseParams random_pose(Rng& rng, std::size_t k) {
  PoseParams pose;
  for (std::size_t j = 0; j < k; ++j) pose.rotations.push_back(random_rotation(rng));
  return pose;
}

inline double max_point_error(const PointSet& a, const PointSet& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a[i] - b[i]).norm());
  return worst;
}

/// Runs `fn` and returns the ErrorCode it throws; fails loudly otherwise.
inline ErrorCode thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected an oad::Error");
}

}  // namespace oad::testing
