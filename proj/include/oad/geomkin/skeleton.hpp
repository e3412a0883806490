#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oad/core/types.hpp"

namespace oad {

inline constexpr int kShapeCoefficients = 10;
inline constexpr std::uint64_t kDefaultShapeBasisSeed = 42;

/// Toy skinned mesh attached to a skeleton; stands in for a parametric body
/// model when vertex error is evaluated.
struct SkinnedMesh {
  PointSet vertices;    ///< rest-pose vertex positions, meters
  Matrix weights;       ///< V x K_j, each row nonnegative and summing to 1
  Matrix shape_basis;   ///< 3V x 10 displacement basis, rows (x,y,z) per vertex
};

/// Joint tree with rest-pose bone offsets.
///
/// Joints are stored in topological order: parents[0] == -1 is the single
/// root and parents[j] < j for every other joint. rest_offsets[j] is the bone
/// vector from parent to joint j in the rest pose; rest_offsets[0] is the
/// rest-pose root position.
class SkeletonTemplate {
 public:
  /// Validates the tree and offset invariants; throws kInvalidInput.
  SkeletonTemplate(std::vector<int> parents, PointSet rest_offsets);
  /// As above, plus a vertex template and skinning weights. The shape basis is
  /// drawn from `shape_seed`.
  SkeletonTemplate(std::vector<int> parents, PointSet rest_offsets, PointSet vertices, Matrix weights,
                   std::uint64_t shape_seed = kDefaultShapeBasisSeed);

  std::size_t joint_count() const { return parents_.size(); }
  int parent(std::size_t j) const { return parents_[j]; }
  const std::vector<int>& parents() const { return parents_; }
  const Vec3& rest_offset(std::size_t j) const { return offsets_[j]; }
  const PointSet& rest_offsets() const { return offsets_; }

  /// Rest-pose joint positions: prefix sums of offsets along the tree.
  PointSet rest_positions() const;

  bool has_mesh() const { return mesh_.has_value(); }
  /// Throws kUnsupported when no vertex template is attached.
  const SkinnedMesh& mesh() const;

 private:
  std::vector<int> parents_;
  PointSet offsets_;
  std::optional<SkinnedMesh> mesh_;
};

/// Seeded 3V x 10 displacement basis (centimeter scale).
Matrix make_shape_basis(std::size_t vertex_count, std::uint64_t seed);

/// 16-joint humanoid (pelvis root, legs, spine, head, arms), facing +z with
/// +y up and +x to the body's left. With `with_mesh`, four vertices ring
/// every bone.
SkeletonTemplate humanoid_template(bool with_mesh = true);

namespace humanoid {
enum Joint : int {
  kPelvis = 0,
  kLeftHip, kLeftKnee, kLeftAnkle,
  kRightHip, kRightKnee, kRightAnkle,
  kSpine, kNeck, kHead,
  kLeftShoulder, kLeftElbow, kLeftWrist,
  kRightShoulder, kRightElbow, kRightWrist,
  kCount
};
}  // namespace humanoid

// {"parents": [...], "rest_offsets": [[x,y,z],...], "vertices": [...], "weights": [[...],...]}
SkeletonTemplate skeleton_from_json(const nlohmann::json& j);
nlohmann::json skeleton_to_json(const SkeletonTemplate& s);
SkeletonTemplate load_skeleton(const std::filesystem::path& path);
void save_skeleton(const SkeletonTemplate& s, const std::filesystem::path& path);

}  // namespace oad
