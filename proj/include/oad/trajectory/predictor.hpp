#pragma once

#include <span>
#include <string>

#include "oad/core/types.hpp"
#include "oad/geomkin/kinematics.hpp"
#include "oad/trajectory/trajectory.hpp"

namespace oad {

inline constexpr int kDefaultLatentDim = 32;

/// Latent code accompanying the pose sequence into a trajectory decoder.
struct TrajectoryLatent {
  Vector values = Vector::Zero(kDefaultLatentDim);
};

/// Maps a pose sequence (plus latent) to an ego-centric trajectory with one
/// step per pose. Implementations must return equal outputs for equal
/// inputs, including under concurrent calls.
class TrajectoryPredictor {
 public:
  virtual ~TrajectoryPredictor() = default;
  virtual std::string name() const = 0;
  virtual EgoTrajectory predict(std::span<const PoseParams> poses, const TrajectoryLatent& latent) const = 0;
};

/// Emits a constant forward step with zero heading change and identity
/// residuals. Ignores pose content and latent.
class ConstantVelocityPredictor final : public TrajectoryPredictor {
 public:
  explicit ConstantVelocityPredictor(double step = 0.03, EgoInitialState initial = {})
      : step_(step), initial_(initial) {}

  std::string name() const override { return "constant-velocity"; }
  EgoTrajectory predict(std::span<const PoseParams> poses, const TrajectoryLatent& latent) const override;

 private:
  double step_;
  EgoInitialState initial_;
};

/// Runs `predictor` over a non-empty pose sequence. Predictor failures are
/// rethrown as kPredictor naming the predictor; a predictor returning the
/// wrong number of steps is a kPredictor error too.
EgoTrajectory predict_trajectory(std::span<const PoseParams> poses, const TrajectoryPredictor& predictor,
                                 const TrajectoryLatent& latent = {});

}  // namespace oad
