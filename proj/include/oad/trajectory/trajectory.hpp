#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "oad/geomkin/rotation.hpp"

namespace oad {

/// One frame of heading-local root motion.
///
/// local_translation is expressed in the previous frame's heading frame:
/// x lateral, y vertical (added unrotated), z forward. residual_rotation is
/// the root orientation relative to the current heading frame.
struct EgoStep {
  double delta_heading = 0.0;
  Vec3 local_translation = Vec3::Zero();
  Rotation residual_rotation;
};

struct EgoInitialState {
  Vec3 translation = Vec3::Zero();
  double heading = 0.0;
};

struct EgoTrajectory {
  std::vector<EgoStep> steps;
  EgoInitialState initial;
};

struct GlobalTrajectory {
  std::vector<Vec3> translations;
  std::vector<Rotation> rotations;

  std::size_t size() const { return translations.size(); }
};

/// Heading (yaw about +y) of a root orientation: the angle of its forward
/// axis (+z) projected onto the ground plane. Throws kDegenerateHeading
/// when the forward axis is within 1e-6 of vertical.
double heading_of(const Rotation& r);

/// Accumulates heading-local steps into world-frame translations and
/// rotations. Step 0 is applied to the initial state, so T steps yield T
/// frames. Throws kInvalidInput on an empty trajectory.
GlobalTrajectory ego_to_global(const EgoTrajectory& e);

/// Exact inverse of ego_to_global for trajectories whose residual rotations
/// carry no yaw. The initial state is the frame before frame 0.
EgoTrajectory global_to_ego(const GlobalTrajectory& g, const EgoInitialState& initial = {});

// JSON lines, one frame per line: {"t": [x,y,z], "q": [w,x,y,z]}
void write_trajectory(std::ostream& out, const GlobalTrajectory& g);
GlobalTrajectory read_trajectory(std::istream& in);
void save_trajectory(const GlobalTrajectory& g, const std::filesystem::path& path);
GlobalTrajectory load_trajectory(const std::filesystem::path& path);

}  // namespace oad
