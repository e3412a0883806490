#include "oad/evalmetrics/losses.hpp"

#include <cmath>

#include "oad/core/error.hpp"

namespace oad {

double keypoint_loss(const JointPositions& p, const JointPositions& p_hat) {
  require(p.size() == p_hat.size(), ErrorCode::kDimension, "keypoint counts differ");
  require(!p.empty(), ErrorCode::kDimension, "no keypoints");
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) sum += (p[k] - p_hat[k]).cwiseAbs().sum();
  return sum / double(p.size());
}

double twist_loss(const TwistAngles& phi, const TwistAngles& phi_hat) {
  require(phi.angles.size() == phi_hat.angles.size(), ErrorCode::kDimension, "twist counts differ");
  require(!phi.angles.empty(), ErrorCode::kDimension, "no twist angles");
  double sum = 0.0;
  for (std::size_t k = 0; k < phi.angles.size(); ++k)
    sum += std::hypot(std::cos(phi.angles[k]) - std::cos(phi_hat.angles[k]),
                      std::sin(phi.angles[k]) - std::sin(phi_hat.angles[k]));
  return sum / double(phi.angles.size());
}

SmplLoss smpl_param_loss(const ShapeParams& beta, const ShapeParams& beta_hat, const PoseParams& theta,
                         const PoseParams& theta_hat) {
  require(theta.rotations.size() == theta_hat.rotations.size(), ErrorCode::kDimension, "pose joint counts differ");
  SmplLoss l;
  double sq = 0.0;
  for (std::size_t i = 0; i < beta.coefficients.size(); ++i)
    sq += (beta.coefficients[i] - beta_hat.coefficients[i]) * (beta.coefficients[i] - beta_hat.coefficients[i]);
  l.shape = std::sqrt(sq);
  sq = 0.0;
  for (std::size_t j = 0; j < theta.rotations.size(); ++j)
    sq += (theta.rotations[j].log() - theta_hat.rotations[j].log()).squaredNorm();
  l.pose = std::sqrt(sq);
  return l;
}

}  // namespace oad
