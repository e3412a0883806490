#include "oad/geomkin/skeleton.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "oad/core/error.hpp"
#include "oad/core/rng.hpp"

namespace oad {

namespace {

void validate_tree(const std::vector<int>& parents, const PointSet& offsets) {
  require(!parents.empty(), ErrorCode::kInvalidInput, "skeleton needs at least one joint");
  require(parents.size() == offsets.size(), ErrorCode::kDimension, "parents and rest_offsets differ in length");
  require(parents[0] == -1, ErrorCode::kInvalidInput, "joint 0 must be the root (parent -1)");
  for (std::size_t j = 0; j < parents.size(); ++j) {
    require(offsets[j].allFinite(), ErrorCode::kInvalidInput, "rest offsets must be finite");
    if (j == 0) continue;
    require(parents[j] >= 0 && parents[j] < static_cast<int>(j), ErrorCode::kInvalidInput,
            "parents must satisfy 0 <= parents[j] < j for non-root joint " + std::to_string(j));
    require(offsets[j].norm() > 0.0, ErrorCode::kInvalidInput,
            "non-root rest offset has zero length at joint " + std::to_string(j));
  }
}

}  // namespace

SkeletonTemplate::SkeletonTemplate(std::vector<int> parents, PointSet rest_offsets)
    : parents_(std::move(parents)), offsets_(std::move(rest_offsets)) {
  validate_tree(parents_, offsets_);
}

SkeletonTemplate::SkeletonTemplate(std::vector<int> parents, PointSet rest_offsets, PointSet vertices,
                                   Matrix weights, std::uint64_t shape_seed)
    : SkeletonTemplate(std::move(parents), std::move(rest_offsets)) {
  const auto v = static_cast<Eigen::Index>(vertices.size());
  require(weights.rows() == v && weights.cols() == static_cast<Eigen::Index>(joint_count()), ErrorCode::kDimension,
          "skinning weights must be V x K_j");
  for (Eigen::Index r = 0; r < v; ++r) {
    require(vertices[r].allFinite(), ErrorCode::kInvalidInput, "vertex template must be finite");
    require((weights.row(r).array() >= 0.0).all(), ErrorCode::kInvalidInput, "skinning weights must be nonnegative");
    require(std::abs(weights.row(r).sum() - 1.0) <= 1e-9, ErrorCode::kInvalidInput,
            "skinning weight row " + std::to_string(r) + " does not sum to 1");
  }
  Matrix basis = make_shape_basis(vertices.size(), shape_seed);
  mesh_ = SkinnedMesh{std::move(vertices), std::move(weights), std::move(basis)};
}

PointSet SkeletonTemplate::rest_positions() const {
  PointSet out(joint_count());
  out[0] = offsets_[0];
  for (std::size_t j = 1; j < joint_count(); ++j) out[j] = out[parents_[j]] + offsets_[j];
  return out;
}

const SkinnedMesh& SkeletonTemplate::mesh() const {
  if (!mesh_) fail(ErrorCode::kUnsupported, "skeleton has no vertex template");
  return *mesh_;
}

Matrix make_shape_basis(std::size_t vertex_count, std::uint64_t seed) {
  Rng rng(seed);
  Matrix basis(3 * static_cast<Eigen::Index>(vertex_count), kShapeCoefficients);
  for (Eigen::Index r = 0; r < basis.rows(); ++r)
    for (Eigen::Index c = 0; c < basis.cols(); ++c) basis(r, c) = 0.01 * rng.normal();
  return basis;
}

SkeletonTemplate humanoid_template(bool with_mesh) {
  using namespace humanoid;
  std::vector<int> parents(kCount);
  PointSet offsets(kCount);
  auto set = [&](Joint j, int parent, double x, double y, double z) {
    parents[j] = parent;
    offsets[j] = Vec3(x, y, z);
  };
  set(kPelvis, -1, 0.0, 0.0, 0.0);
  set(kLeftHip, kPelvis, 0.10, -0.06, 0.0);
  set(kLeftKnee, kLeftHip, 0.0, -0.42, 0.0);
  set(kLeftAnkle, kLeftKnee, 0.0, -0.41, 0.0);
  set(kRightHip, kPelvis, -0.10, -0.06, 0.0);
  set(kRightKnee, kRightHip, 0.0, -0.42, 0.0);
  set(kRightAnkle, kRightKnee, 0.0, -0.41, 0.0);
  set(kSpine, kPelvis, 0.0, 0.26, 0.0);
  set(kNeck, kSpine, 0.0, 0.26, 0.02);
  set(kHead, kNeck, 0.0, 0.16, 0.02);
  set(kLeftShoulder, kNeck, 0.17, -0.04, 0.0);
  set(kLeftElbow, kLeftShoulder, 0.0, -0.28, 0.0);
  set(kLeftWrist, kLeftElbow, 0.0, -0.25, 0.02);
  set(kRightShoulder, kNeck, -0.17, -0.04, 0.0);
  set(kRightElbow, kRightShoulder, 0.0, -0.28, 0.0);
  set(kRightWrist, kRightElbow, 0.0, -0.25, 0.02);
  if (!with_mesh) return SkeletonTemplate(std::move(parents), std::move(offsets));

  // Per bone: a ring of four vertices at mid-bone bound to the bone, and a
  // ring near the distal end blended with the first child bone.
  std::vector<std::vector<int>> children(kCount);
  for (int j = 1; j < kCount; ++j) children[parents[j]].push_back(j);
  PointSet rest(kCount);
  rest[0] = offsets[0];
  for (int j = 1; j < kCount; ++j) rest[j] = rest[parents[j]] + offsets[j];

  PointSet vertices;
  std::vector<std::vector<std::pair<int, double>>> binds;
  for (int j = 1; j < kCount; ++j) {
    const Vec3 axis = offsets[j].normalized();
    Vec3 side = axis.cross(Vec3::UnitZ());
    if (side.norm() < 1e-6) side = axis.cross(Vec3::UnitX());
    side.normalize();
    const Vec3 front = axis.cross(side).normalized();
    const Vec3 ring[4] = {side, front, -side, -front};
    constexpr double kRadius = 0.05;
    for (const Vec3& dir : ring) {
      vertices.push_back(rest[parents[j]] + 0.5 * offsets[j] + kRadius * dir);
      binds.push_back({{j, 1.0}});
    }
    for (const Vec3& dir : ring) {
      vertices.push_back(rest[parents[j]] + 0.85 * offsets[j] + kRadius * dir);
      if (children[j].empty()) {
        binds.push_back({{j, 1.0}});
      } else {
        binds.push_back({{j, 0.5}, {children[j].front(), 0.5}});
      }
    }
  }
  Matrix weights = Matrix::Zero(static_cast<Eigen::Index>(vertices.size()), kCount);
  for (std::size_t v = 0; v < binds.size(); ++v)
    for (auto [joint, w] : binds[v]) weights(static_cast<Eigen::Index>(v), joint) = w;
  return SkeletonTemplate(std::move(parents), std::move(offsets), std::move(vertices), std::move(weights));
}

namespace {

Vec3 vec3_from_json(const nlohmann::json& j) {
  require(j.is_array() && j.size() == 3, ErrorCode::kParse, "expected [x, y, z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

SkeletonTemplate skeleton_from_json(const nlohmann::json& j) {
  try {
    std::vector<int> parents = j.at("parents").get<std::vector<int>>();
    PointSet offsets;
    for (const auto& o : j.at("rest_offsets")) offsets.push_back(vec3_from_json(o));
    if (!j.contains("vertices")) return SkeletonTemplate(std::move(parents), std::move(offsets));
    PointSet vertices;
    for (const auto& v : j.at("vertices")) vertices.push_back(vec3_from_json(v));
    const auto& rows = j.at("weights");
    require(rows.size() == vertices.size(), ErrorCode::kDimension, "one weight row per vertex expected");
    Matrix weights(static_cast<Eigen::Index>(vertices.size()), static_cast<Eigen::Index>(parents.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      require(rows[r].size() == parents.size(), ErrorCode::kDimension, "weight row width must equal joint count");
      for (std::size_t c = 0; c < parents.size(); ++c)
        weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
    }
    const std::uint64_t seed = j.value("shape_seed", kDefaultShapeBasisSeed);
    return SkeletonTemplate(std::move(parents), std::move(offsets), std::move(vertices), std::move(weights), seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("skeleton json: ") + e.what());
  }
}

nlohmann::json skeleton_to_json(const SkeletonTemplate& s) {
  nlohmann::json j;
  j["parents"] = s.parents();
  auto& offsets = j["rest_offsets"] = nlohmann::json::array();
  for (const auto& o : s.rest_offsets()) offsets.push_back({o.x(), o.y(), o.z()});
  if (s.has_mesh()) {
    const auto& mesh = s.mesh();
    auto& verts = j["vertices"] = nlohmann::json::array();
    for (const auto& v : mesh.vertices) verts.push_back({v.x(), v.y(), v.z()});
    auto& weights = j["weights"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < mesh.weights.rows(); ++r) {
      auto row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < mesh.weights.cols(); ++c) row.push_back(mesh.weights(r, c));
      weights.push_back(std::move(row));
    }
  }
  return j;
}

SkeletonTemplate load_skeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open skeleton file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return skeleton_from_json(j);
}

void save_skeleton(const SkeletonTemplate& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write skeleton file " + path.string());
  out << skeleton_to_json(s).dump(2) << '\n';
}

}  // namespace oad
