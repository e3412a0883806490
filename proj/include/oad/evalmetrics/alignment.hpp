#pragma once

#include <string>
#include <vector>

#include "oad/geomkin/kinematics.hpp"

namespace oad {

struct SimilarityTransform {
  double scale = 1.0;
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  PointSet apply(const PointSet& points) const;
};

/// Least-squares similarity taking X onto Y (Umeyama), reflections
/// excluded. Throws kDegeneracy when the cross-covariance has rank < 2.
SimilarityTransform procrustes_align(const PointSet& x, const PointSet& y);

/// sum_i |T(x_i) - y_i|^2.
double alignment_residual(const SimilarityTransform& t, const PointSet& x, const PointSet& y);

enum class MpjpeMode { kRaw, kRootAligned, kProcrustes };
MpjpeMode parse_mpjpe_mode(const std::string& name);
std::string to_string(MpjpeMode mode);

/// Mean joint distance in millimetres (inputs in metres). Joint 0 is the
/// root for root alignment.
double mpjpe(const std::vector<JointPositions>& pred, const std::vector<JointPositions>& gt,
             MpjpeMode mode = MpjpeMode::kRootAligned);

/// Mean vertex distance in millimetres after subtracting each frame's
/// skeleton root from its own vertices.
double mpvpe(const std::vector<VertexPositions>& pred, const std::vector<VertexPositions>& gt,
             const std::vector<Vec3>& pred_roots, const std::vector<Vec3>& gt_roots);

}  // namespace oad
