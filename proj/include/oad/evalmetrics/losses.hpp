#pragma once

#include <utility>

#include "oad/geomkin/kinematics.hpp"

namespace oad {

/// (1/K) sum_k |p_k - p_hat_k|_1.
double keypoint_loss(const JointPositions& p, const JointPositions& p_hat);

/// (1/K) sum_k |(cos phi, sin phi) - (cos phi_hat, sin phi_hat)|_2.
double twist_loss(const TwistAngles& phi, const TwistAngles& phi_hat);

struct SmplLoss {
  double shape = 0.0;
  double pose = 0.0;
};

/// Euclidean norms of the shape difference and of the difference of the
/// flattened canonical axis-angle pose vectors.
SmplLoss smpl_param_loss(const ShapeParams& beta, const ShapeParams& beta_hat, const PoseParams& theta,
                         const PoseParams& theta_hat);

}  // namespace oad
