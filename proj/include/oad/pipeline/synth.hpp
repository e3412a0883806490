#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oad/geomkin/heatmap.hpp"
#include "oad/geomkin/kinematics.hpp"
#include "oad/trajectory/trajectory.hpp"

namespace oad {

enum class SceneKind { kWalk, kOscillate, kStumble };
std::string to_string(SceneKind k);
SceneKind parse_scene_kind(const std::string& name);

/// Root-centred heatmap crop used by the synthetic detector. Voxel values
/// are peak - d^2 / (2 sigma^2) clipped at zero, with d the distance to the
/// detector's (jittered) estimate in voxels.
struct HeatmapRig {
  std::size_t resolution = 20;
  double pitch = 0.12;
  Vec3 center_offset = Vec3(0.0, -0.1, 0.0);
  double sigma_voxels = 0.8;
  double peak = 30.0;
  double jitter_sd = 0.015;
  double jitter_clamp_voxels = 0.4;

  HeatmapBounds bounds_around(const Vec3& root) const;
};

struct SynthOptions {
  std::size_t frames = 98;
  double fps = 30.0;
  std::size_t min_frames = 34;
  std::optional<double> speed;      // walk and stumble, m/frame
  std::optional<double> amplitude;  // oscillate, rad
  HeatmapRig rig;
};

/// Mutually consistent ground truth for one synthetic clip.
struct SyntheticScene {
  SceneKind kind = SceneKind::kWalk;
  std::uint64_t seed = 0;
  double fps = 30.0;
  HeatmapRig rig;
  std::vector<PoseParams> poses;
  std::vector<TwistAngles> twists;
  GlobalTrajectory trajectory;
  std::vector<JointPositions> joints;
  /// Where the detector's heatmap peaks sit: joints plus clamped jitter.
  std::vector<JointPositions> detections;
  long onset_frame = -1;

  std::size_t frame_count() const { return joints.size(); }
  bool abnormal() const { return kind == SceneKind::kStumble; }
  std::string label() const { return abnormal() ? "abnormal" : "normal"; }
  Heatmap3D heatmap(std::size_t frame) const;
  std::vector<Heatmap3D> heatmaps() const;
};

SyntheticScene synth_generate(const SkeletonTemplate& skeleton, SceneKind kind, std::uint64_t seed,
                              const SynthOptions& options = {});

/// Heatmap crop with one Gaussian-like bump per joint.
Heatmap3D render_heatmap(const HeatmapRig& rig, const Vec3& crop_root, const JointPositions& peaks);

}  // namespace oad
