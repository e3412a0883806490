#pragma once

#include <numbers>

#include "oad/trajectory/trajectory.hpp"
#include "support/generators.hpp"

namespace oad::testing {

/// Random ego trajectory whose residuals carry pitch and roll but no yaw,
/// with pitch bounded away from vertical.
inline EgoTrajectory random_ego_trajectory(Rng& rng, std::size_t frames) {
  EgoTrajectory e;
  e.initial.translation = Vec3(rng.normal(), rng.normal(), rng.normal());
  e.initial.heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
  for (std::size_t t = 0; t < frames; ++t) {
    EgoStep s;
    s.delta_heading = rng.uniform(-3.0, 3.0);
    s.local_translation = Vec3(rng.normal(0.0, 0.05), rng.normal(0.0, 0.02), rng.normal(0.03, 0.05));
    const Rotation pitch = Rotation::from_axis_angle(Vec3::UnitX(), rng.uniform(-1.2, 1.2));
    const Rotation roll = Rotation::from_axis_angle(Vec3::UnitZ(), rng.uniform(-3.0, 3.0));
    s.residual_rotation = pitch * roll;
    e.steps.push_back(s);
  }
  return e;
}

inline double max_step_error(const EgoTrajectory& a, const EgoTrajectory& b) {
  double worst = 0.0;
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    worst = std::max(worst, std::abs(wrap_angle(a.steps[t].delta_heading - b.steps[t].delta_heading)));
    worst = std::max(worst, (a.steps[t].local_translation - b.steps[t].local_translation).norm());
    worst = std::max(worst, distance(a.steps[t].residual_rotation, b.steps[t].residual_rotation));
  }
  return worst;
}

inline double max_global_error(const GlobalTrajectory& a, const GlobalTrajectory& b) {
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    worst = std::max(worst, (a.translations[t] - b.translations[t]).norm());
    worst = std::max(worst, distance(a.rotations[t], b.rotations[t]));
  }
  return worst;
}

}  // namespace oad::testing
