#include "oad/geomkin/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "oad/core/error.hpp"

namespace oad {

namespace {

void check_pose(const SkeletonTemplate& s, const PoseParams& pose) {
  require(pose.rotations.size() == s.joint_count(), ErrorCode::kDimension,
          "pose has " + std::to_string(pose.rotations.size()) + " rotations, skeleton has " +
              std::to_string(s.joint_count()) + " joints");
}

}  // namespace

PosedSkeleton pose_skeleton(const SkeletonTemplate& s, const PoseParams& pose, const Vec3& root_pos,
                            const Rotation& root_rot) {
  check_pose(s, pose);
  const std::size_t k = s.joint_count();
  PosedSkeleton out{JointPositions(k), std::vector<Rotation>(k)};
  out.global_rotations[0] = root_rot * pose.rotations[0];
  out.positions[0] = root_pos;
  for (std::size_t j = 1; j < k; ++j) {
    const auto p = static_cast<std::size_t>(s.parent(j));
    out.global_rotations[j] = out.global_rotations[p] * pose.rotations[j];
    out.positions[j] = out.positions[p] + out.global_rotations[j] * s.rest_offset(j);
  }
  return out;
}

JointPositions forward_kinematics(const SkeletonTemplate& s, const PoseParams& pose, const Vec3& root_pos,
                                  const Rotation& root_rot) {
  return pose_skeleton(s, pose, root_pos, root_rot).positions;
}

IkSolution swing_twist_ik_checked(const SkeletonTemplate& s, const JointPositions& p, const TwistAngles& phi,
                                  const IkOptions& options) {
  const std::size_t k = s.joint_count();
  require(p.size() == k, ErrorCode::kDimension, "joint positions do not match skeleton joint count");
  require(phi.angles.size() + 1 == k, ErrorCode::kDimension, "need one twist angle per non-root joint");

  IkSolution sol;
  sol.pose.rotations.resize(k);
  sol.pose.rotations[0] = options.root_orientation;
  std::vector<Rotation> global(k);
  global[0] = options.root_orientation;

  for (std::size_t j = 1; j < k; ++j) {
    const auto parent = static_cast<std::size_t>(s.parent(j));
    const Vec3 bone = p[j] - p[parent];
    const double observed_length = bone.norm();
    if (!(observed_length > 0.0) || !std::isfinite(observed_length)) {
      fail(ErrorCode::kDegenerateBone, "observed bone to joint " + std::to_string(j) + " has zero length");
    }
    const Vec3& rest = s.rest_offset(j);
    const double rel_error = std::abs(observed_length - rest.norm()) / rest.norm();
    sol.max_relative_length_error = std::max(sol.max_relative_length_error, rel_error);
    if (rel_error > options.length_tolerance) sol.realizable = false;

    const Vec3 local_dir = global[parent].inverse() * bone;
    const Rotation swing = Rotation::between(rest, local_dir);
    const Rotation twist = Rotation::from_axis_angle(rest, phi.angles[j - 1]);
    sol.pose.rotations[j] = swing * twist;
    global[j] = global[parent] * sol.pose.rotations[j];
  }
  return sol;
}

PoseParams swing_twist_ik(const SkeletonTemplate& s, const JointPositions& p, const TwistAngles& phi,
                          const IkOptions& options) {
  return swing_twist_ik_checked(s, p, phi, options).pose;
}

TwistAngles extract_twist(const SkeletonTemplate& s, const PoseParams& pose) {
  check_pose(s, pose);
  TwistAngles out;
  out.angles.reserve(s.joint_count() - 1);
  for (std::size_t j = 1; j < s.joint_count(); ++j) {
    const Vec3 axis = s.rest_offset(j).normalized();
    const auto& q = pose.rotations[j].quaternion();
    const double along = q.vec().dot(axis);
    // Twist quaternion is (w, along * axis); a pure 180-degree swing leaves it empty.
    if (along == 0.0 && q.w() == 0.0) {
      out.angles.push_back(0.0);
      continue;
    }
    out.angles.push_back(wrap_angle(2.0 * std::atan2(along, q.w())));
  }
  return out;
}

VertexPositions linear_blend_skin(const SkeletonTemplate& s, const PoseParams& pose, const ShapeParams& shape) {
  return linear_blend_skin(s, pose, shape, s.rest_offset(0), Rotation());
}

VertexPositions linear_blend_skin(const SkeletonTemplate& s, const PoseParams& pose, const ShapeParams& shape,
                                  const Vec3& root_pos, const Rotation& root_rot) {
  const SkinnedMesh& mesh = s.mesh();
  const PosedSkeleton posed = pose_skeleton(s, pose, root_pos, root_rot);
  const PointSet rest = s.rest_positions();
  const Eigen::Map<const Vector> beta(shape.coefficients.data(), kShapeCoefficients);
  const Vector displacement = mesh.shape_basis * beta;

  const std::size_t k = s.joint_count();
  std::vector<Mat3> rot(k);
  for (std::size_t j = 0; j < k; ++j) rot[j] = posed.global_rotations[j].matrix();

  VertexPositions out(mesh.vertices.size(), Vec3::Zero());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec3 shaped = mesh.vertices[v] + displacement.segment<3>(3 * static_cast<Eigen::Index>(v));
    for (std::size_t j = 0; j < k; ++j) {
      const double w = mesh.weights(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j));
      if (w == 0.0) continue;
      out[v] += w * (rot[j] * (shaped - rest[j]) + posed.positions[j]);
    }
  }
  return out;
}

}  // namespace oad
