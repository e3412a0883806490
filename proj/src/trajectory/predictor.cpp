#include "oad/trajectory/predictor.hpp"

#include "oad/core/error.hpp"

namespace oad {

EgoTrajectory ConstantVelocityPredictor::predict(std::span<const PoseParams> poses,
                                                 const TrajectoryLatent& /*latent*/) const {
  EgoTrajectory e;
  e.initial = initial_;
  e.steps.assign(poses.size(), EgoStep{0.0, Vec3(0.0, 0.0, step_), Rotation()});
  return e;
}

EgoTrajectory predict_trajectory(std::span<const PoseParams> poses, const TrajectoryPredictor& predictor,
                                 const TrajectoryLatent& latent) {
  require(!poses.empty(), ErrorCode::kInvalidInput, "trajectory prediction needs at least one pose");
  require(latent.values.allFinite(), ErrorCode::kInvalidInput, "trajectory latent must be finite");
  EgoTrajectory e;
  try {
    e = predictor.predict(poses, latent);
  } catch (const std::exception& ex) {
    fail(ErrorCode::kPredictor, "trajectory predictor '" + predictor.name() + "' failed: " + ex.what());
  }
  if (e.steps.size() != poses.size()) {
    fail(ErrorCode::kPredictor, "trajectory predictor '" + predictor.name() + "' returned " +
                                    std::to_string(e.steps.size()) + " steps for " + std::to_string(poses.size()) +
                                    " poses");
  }
  return e;
}

}  // namespace oad
