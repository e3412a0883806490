#include "oad/pipeline/synth.hpp"

#include <cmath>
#include <numbers>

#include "oad/core/error.hpp"
#include "oad/core/rng.hpp"
#include "oad/geomkin/skeleton.hpp"

namespace oad {

namespace {

using namespace humanoid;

constexpr double kStandingHeight = 0.93;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Rotation rx(double a) { return Rotation::from_axis_angle(Vec3::UnitX(), a); }

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

struct Gait {
  double speed, period, phase, hip, knee, arm, bob, sway;
};

Gait random_gait(Rng& rng, const SynthOptions& o) {
  Gait g;
  g.speed = o.speed.value_or(rng.uniform(0.025, 0.04));
  g.period = rng.uniform(28.0, 36.0);
  g.phase = rng.uniform(0.0, kTwoPi);
  g.hip = rng.uniform(0.35, 0.5);
  g.knee = rng.uniform(0.5, 0.8);
  g.arm = rng.uniform(0.25, 0.4);
  g.bob = rng.uniform(0.01, 0.02);
  g.sway = rng.uniform(0.02, 0.05);
  return g;
}

/// Leg, arm and torso angles of the gait at phase p, scaled by `scale`.
void gait_pose(PoseParams& pose, const Gait& g, double p, double scale) {
  const double s = std::sin(p);
  pose.rotations[kLeftKnee] = rx(-scale * g.hip * s);
  pose.rotations[kRightKnee] = rx(scale * g.hip * s);
  pose.rotations[kLeftAnkle] = rx(scale * g.knee * std::max(0.0, std::sin(p + 1.2)));
  pose.rotations[kRightAnkle] = rx(scale * g.knee * std::max(0.0, -std::sin(p + 1.2)));
  pose.rotations[kLeftElbow] = rx(scale * g.arm * s);
  pose.rotations[kRightElbow] = rx(-scale * g.arm * s);
  pose.rotations[kLeftWrist] = rx(-scale * 0.3);
  pose.rotations[kRightWrist] = rx(-scale * 0.3);
  pose.rotations[kSpine] = rx(scale * 0.04 * std::sin(2.0 * p));
}

void finish(SyntheticScene& scene, const SkeletonTemplate& skeleton, const SynthOptions& o) {
  Rng jitter = Rng::substream(scene.seed, "detector");
  const double clamp = o.rig.jitter_clamp_voxels * o.rig.pitch;
  for (std::size_t t = 0; t < scene.poses.size(); ++t) {
    const auto& pos = forward_kinematics(skeleton, scene.poses[t], scene.trajectory.translations[t],
                                         scene.trajectory.rotations[t]);
    scene.joints.push_back(pos);
    scene.twists.push_back(extract_twist(skeleton, scene.poses[t]));
    JointPositions det = pos;
    for (Vec3& p : det)
      for (int a = 0; a < 3; ++a) p[a] += std::clamp(jitter.normal(0.0, o.rig.jitter_sd), -clamp, clamp);
    scene.detections.push_back(std::move(det));
  }
}

}  // namespace

std::string to_string(SceneKind k) {
  switch (k) {
    case SceneKind::kWalk: return "walk";
    case SceneKind::kOscillate: return "oscillate";
    case SceneKind::kStumble: return "stumble";
  }
  return "unknown";
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "walk") return SceneKind::kWalk;
  if (name == "oscillate") return SceneKind::kOscillate;
  if (name == "stumble") return SceneKind::kStumble;
  fail(ErrorCode::kInvalidInput, "unknown scene kind '" + name + "' (expected walk, oscillate or stumble)");
}

HeatmapBounds HeatmapRig::bounds_around(const Vec3& root) const {
  const Vec3 c = root + center_offset;
  const double half = 0.5 * pitch * double(resolution);
  return {c.x() - half, c.x() + half, c.y() - half, c.y() + half, c.z() - half, c.z() + half};
}

Heatmap3D render_heatmap(const HeatmapRig& rig, const Vec3& crop_root, const JointPositions& peaks) {
  const std::size_t n = rig.resolution;
  Heatmap3D h(peaks.size(), n, n, n, rig.bounds_around(crop_root));
  const double inv = 1.0 / (2.0 * rig.sigma_voxels * rig.sigma_voxels * rig.pitch * rig.pitch);
  std::vector<double> dx(n), dy(n), dz(n);
  for (std::size_t j = 0; j < peaks.size(); ++j) {
    const Vec3& p = peaks[j];
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 c = h.voxel_center(i, i, i);
      dx[i] = (c.x() - p.x()) * (c.x() - p.x());
      dy[i] = (c.y() - p.y()) * (c.y() - p.y());
      dz[i] = (c.z() - p.z()) * (c.z() - p.z());
    }
    for (std::size_t z = 0; z < n; ++z)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x)
          h.at(j, z, y, x) = static_cast<float>(std::max(0.0, rig.peak - (dx[x] + dy[y] + dz[z]) * inv));
  }
  return h;
}

Heatmap3D SyntheticScene::heatmap(std::size_t frame) const {
  require(frame < frame_count(), ErrorCode::kInvalidInput, "frame outside scene");
  return render_heatmap(rig, trajectory.translations[frame], detections[frame]);
}

std::vector<Heatmap3D> SyntheticScene::heatmaps() const {
  std::vector<Heatmap3D> out;
  out.reserve(frame_count());
  for (std::size_t t = 0; t < frame_count(); ++t) out.push_back(heatmap(t));
  return out;
}

SyntheticScene synth_generate(const SkeletonTemplate& skeleton, SceneKind kind, std::uint64_t seed,
                              const SynthOptions& o) {
  require(skeleton.joint_count() == std::size_t(kCount), ErrorCode::kInvalidInput,
          "synthetic scenes need the 16-joint humanoid skeleton");
  require(o.frames >= o.min_frames, ErrorCode::kInsufficientData,
          "scene needs at least " + std::to_string(o.min_frames) + " frames, got " + std::to_string(o.frames));
  require(o.fps > 0.0, ErrorCode::kInvalidInput, "fps must be positive");
  SyntheticScene scene;
  scene.kind = kind;
  scene.seed = seed;
  scene.fps = o.fps;
  scene.rig = o.rig;
  Rng rng = Rng::substream(seed, "scene:" + to_string(kind));
  const std::size_t T = o.frames;

  if (kind == SceneKind::kOscillate) {
    const double amp = o.amplitude.value_or(rng.uniform(0.3, 0.8));
    const double omega = kTwoPi / rng.uniform(20.0, 40.0);
    const double phase = rng.uniform(0.0, kTwoPi);
    for (std::size_t t = 0; t < T; ++t) {
      PoseParams pose = PoseParams::identity(std::size_t(kCount));
      pose.rotations[kLeftWrist] = rx(-amp * std::sin(omega * double(t) + phase));
      scene.poses.push_back(pose);
      scene.trajectory.translations.emplace_back(0.0, kStandingHeight, 0.0);
      scene.trajectory.rotations.emplace_back();
    }
    finish(scene, skeleton, o);
    return scene;
  }

  const Gait g = random_gait(rng, o);
  const bool stumble = kind == SceneKind::kStumble;
  double onset = double(T) * 2.0;
  double ramp = 1.0, turn = 0.0, drop = 0.0, pitch = 0.0;
  if (stumble) {
    onset = std::round(rng.uniform(0.2, 0.35) * double(T));
    ramp = rng.uniform(6.0, 10.0);
    turn = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.6, 1.0);
    drop = rng.uniform(0.25, 0.4);
    pitch = rng.uniform(0.5, 0.8);
    scene.onset_frame = static_cast<long>(onset);
  }
  double z = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double ft = double(t);
    const double s = stumble ? smoothstep((ft - onset) / ramp) : 0.0;
    const double p = kTwoPi * ft / g.period + g.phase;
    PoseParams pose = PoseParams::identity(std::size_t(kCount));
    gait_pose(pose, g, p, 1.0 - s);
    if (s > 0.0) {
      const double tremor = 0.05 * std::sin(0.9 * ft);
      pose.rotations[kLeftKnee] = rx(-s * 1.1) * pose.rotations[kLeftKnee];
      pose.rotations[kRightKnee] = rx(-s * 0.9) * pose.rotations[kRightKnee];
      pose.rotations[kLeftAnkle] = rx(s * 1.7) * pose.rotations[kLeftAnkle];
      pose.rotations[kRightAnkle] = rx(s * 1.5) * pose.rotations[kRightAnkle];
      pose.rotations[kSpine] = rx(s * (pitch + tremor)) * pose.rotations[kSpine];
      pose.rotations[kLeftElbow] = rx(-s * 0.9) * pose.rotations[kLeftElbow];
      pose.rotations[kRightElbow] = rx(-s * 0.7) * pose.rotations[kRightElbow];
    }
    if (t > 0) z += g.speed * (1.0 - s);
    const double height = kStandingHeight + g.bob * std::cos(2.0 * p) * (1.0 - s) - s * drop;
    scene.trajectory.translations.emplace_back(0.0, height, z);
    scene.trajectory.rotations.push_back(Rotation::about_y(s * turn + g.sway * std::sin(p) * (1.0 - s)));
    scene.poses.push_back(pose);
  }
  finish(scene, skeleton, o);
  return scene;
}

}  // namespace oad
