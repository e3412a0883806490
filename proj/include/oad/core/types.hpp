#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

namespace oad {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// An ordered set of 3-D points in meters (joints of one frame, mesh vertices).
using PointSet = std::vector<Vec3>;

}  // namespace oad
