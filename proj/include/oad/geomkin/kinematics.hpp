#pragma once

#include <array>
#include <vector>

#include "oad/geomkin/rotation.hpp"
#include "oad/geomkin/skeleton.hpp"

namespace oad {

/// Per-joint relative rotations. rotations[j] turns joint j's frame relative
/// to its parent's frame; joint j's frame carries the bone parent -> j, so
/// rotations[j] orients that bone. rotations[0] is the root orientation
/// relative to the root_rot passed to forward_kinematics.
struct PoseParams {
  std::vector<Rotation> rotations;

  static PoseParams identity(std::size_t joint_count) { return {std::vector<Rotation>(joint_count)}; }
};

/// Twist angle about each non-root bone axis, radians in (-pi, pi].
/// angles[j - 1] belongs to joint j.
struct TwistAngles {
  std::vector<double> angles;
};

struct ShapeParams {
  std::array<double, kShapeCoefficients> coefficients{};
};

using JointPositions = PointSet;
using VertexPositions = PointSet;

struct PosedSkeleton {
  JointPositions positions;
  std::vector<Rotation> global_rotations;
};

/// Joint j = position of parent + G_j * rest_offsets[j] with
/// G_j = G_parent * rotations[j]; the root sits at root_pos with
/// G_0 = root_rot * rotations[0]. The root rest offset does not move the root.
PosedSkeleton pose_skeleton(const SkeletonTemplate& s, const PoseParams& pose, const Vec3& root_pos = Vec3::Zero(),
                            const Rotation& root_rot = Rotation());

JointPositions forward_kinematics(const SkeletonTemplate& s, const PoseParams& pose,
                                  const Vec3& root_pos = Vec3::Zero(), const Rotation& root_rot = Rotation());

struct IkOptions {
  /// Relative bone-length error above which the target is treated as
  /// unrealizable (directions kept, template lengths used).
  double length_tolerance = 1e-6;
  /// Orientation written into rotations[0]; any choice reproduces positions.
  Rotation root_orientation;
};

struct IkSolution {
  PoseParams pose;
  bool realizable = true;
  double max_relative_length_error = 0.0;
};

/// Swing-twist analytical IK. For every non-root joint the swing is the
/// minimal rotation taking the template bone direction onto the observed one
/// (both in the parent frame) and the twist is phi about the template bone
/// axis; rotations[j] = swing * twist. FK with root_pos = p[0] and identity
/// root_rot reproduces p whenever it is realizable.
IkSolution swing_twist_ik_checked(const SkeletonTemplate& s, const JointPositions& p, const TwistAngles& phi,
                                  const IkOptions& options = {});

PoseParams swing_twist_ik(const SkeletonTemplate& s, const JointPositions& p, const TwistAngles& phi,
                          const IkOptions& options = {});

/// Twist component of every non-root rotation about its template bone axis.
TwistAngles extract_twist(const SkeletonTemplate& s, const PoseParams& pose);

/// Linear blend skinning of the skeleton's vertex template, displaced by the
/// shape basis times beta. The root defaults to its rest position.
VertexPositions linear_blend_skin(const SkeletonTemplate& s, const PoseParams& pose, const ShapeParams& shape);
VertexPositions linear_blend_skin(const SkeletonTemplate& s, const PoseParams& pose, const ShapeParams& shape,
                                  const Vec3& root_pos, const Rotation& root_rot);

}  // namespace oad
