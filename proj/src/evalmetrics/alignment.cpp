#include "oad/evalmetrics/alignment.hpp"

#include <Eigen/SVD>

#include "oad/core/error.hpp"

namespace oad {

namespace {

constexpr double kRankTolerance = 1e-12;

void check_sequences(std::size_t a, std::size_t b) {
  require(a == b, ErrorCode::kDimension, "sequence lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
  require(a > 0, ErrorCode::kDimension, "empty sequences");
}

double mean_distance(const PointSet& a, const PointSet& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]).norm();
  return sum;
}

PointSet minus_root(const PointSet& p, const Vec3& root) {
  PointSet out = p;
  for (Vec3& v : out) v -= root;
  return out;
}

}  // namespace

PointSet SimilarityTransform::apply(const PointSet& points) const {
  PointSet out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(apply(p));
  return out;
}

SimilarityTransform procrustes_align(const PointSet& x, const PointSet& y) {
  require(x.size() == y.size(), ErrorCode::kDimension, "point sets differ in size");
  require(x.size() >= 3, ErrorCode::kDimension, "procrustes needs at least 3 points");
  const double n = double(x.size());
  Vec3 mx = Vec3::Zero(), my = Vec3::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  Mat3 cov = Mat3::Zero();
  double var_x = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vec3 xc = x[i] - mx;
    cov += (y[i] - my) * xc.transpose();
    var_x += xc.squaredNorm();
  }
  cov /= n;
  var_x /= n;
  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sigma = svd.singularValues();
  require(sigma(0) > 0.0 && sigma(1) > kRankTolerance * sigma(0) && var_x > 0.0, ErrorCode::kDegeneracy,
          "degenerate point configuration: cross-covariance rank below 2");
  Vec3 d(1.0, 1.0, 1.0);
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d(2) = -1.0;
  const Mat3 r = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  SimilarityTransform t;
  t.rotation = Rotation::from_matrix(r);
  t.scale = sigma.dot(d) / var_x;
  require(t.scale > 0.0, ErrorCode::kDegeneracy, "procrustes scale is not positive");
  t.translation = my - t.scale * (r * mx);
  return t;
}

double alignment_residual(const SimilarityTransform& t, const PointSet& x, const PointSet& y) {
  require(x.size() == y.size(), ErrorCode::kDimension, "point sets differ in size");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += (t.apply(x[i]) - y[i]).squaredNorm();
  return sum;
}

MpjpeMode parse_mpjpe_mode(const std::string& name) {
  if (name == "raw") return MpjpeMode::kRaw;
  if (name == "root_aligned") return MpjpeMode::kRootAligned;
  if (name == "pa") return MpjpeMode::kProcrustes;
  fail(ErrorCode::kInvalidInput, "unknown MPJPE mode '" + name + "' (expected raw, root_aligned or pa)");
}

std::string to_string(MpjpeMode mode) {
  switch (mode) {
    case MpjpeMode::kRaw: return "raw";
    case MpjpeMode::kRootAligned: return "root_aligned";
    case MpjpeMode::kProcrustes: return "pa";
  }
  return "unknown";
}

double mpjpe(const std::vector<JointPositions>& pred, const std::vector<JointPositions>& gt, MpjpeMode mode) {
  check_sequences(pred.size(), gt.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    require(pred[t].size() == gt[t].size() && !pred[t].empty(), ErrorCode::kDimension,
            "joint counts differ in frame " + std::to_string(t));
    switch (mode) {
      case MpjpeMode::kRaw: sum += mean_distance(pred[t], gt[t]); break;
      case MpjpeMode::kRootAligned:
        sum += mean_distance(minus_root(pred[t], pred[t][0]), minus_root(gt[t], gt[t][0]));
        break;
      case MpjpeMode::kProcrustes:
        sum += mean_distance(procrustes_align(pred[t], gt[t]).apply(pred[t]), gt[t]);
        break;
    }
    count += pred[t].size();
  }
  return 1000.0 * sum / double(count);
}

double mpvpe(const std::vector<VertexPositions>& pred, const std::vector<VertexPositions>& gt,
             const std::vector<Vec3>& pred_roots, const std::vector<Vec3>& gt_roots) {
  check_sequences(pred.size(), gt.size());
  check_sequences(pred_roots.size(), pred.size());
  check_sequences(gt_roots.size(), gt.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    require(pred[t].size() == gt[t].size() && !pred[t].empty(), ErrorCode::kDimension,
            "vertex counts differ in frame " + std::to_string(t));
    sum += mean_distance(minus_root(pred[t], pred_roots[t]), minus_root(gt[t], gt_roots[t]));
    count += pred[t].size();
  }
  return 1000.0 * sum / double(count);
}

}  // namespace oad
