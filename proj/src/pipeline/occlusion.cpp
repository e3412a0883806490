#include "oad/pipeline/occlusion.hpp"

#include <algorithm>

#include "oad/core/error.hpp"
#include "oad/core/rng.hpp"

namespace oad {

void check_occlusion(const OcclusionSpec& spec, std::size_t frames, std::size_t joints) {
  if (spec.empty()) return;
  require(spec.frame_end <= frames, ErrorCode::kInvalidInput,
          "occlusion frames end at " + std::to_string(spec.frame_end) + " but the sequence has " +
              std::to_string(frames));
  for (std::size_t j : spec.joints)
    require(j < joints, ErrorCode::kInvalidInput, "occluded joint " + std::to_string(j) + " out of range");
}

void occlude_frame(Heatmap3D& h, std::size_t frame, const OcclusionSpec& spec, std::uint64_t seed) {
  if (spec.empty() || frame < spec.frame_begin || frame >= spec.frame_end) return;
  check_occlusion(spec, spec.frame_end, h.joint_count());
  Rng rng = Rng::substream(splitmix64(seed) + frame, "occlusion");
  for (std::size_t j : spec.joints) {
    std::span<float> v = h.volume(j);
    if (spec.mode == OcclusionMode::kZero) {
      std::fill(v.begin(), v.end(), 0.0f);
      continue;
    }
    const float peak = *std::max_element(v.begin(), v.end());
    const double level = 0.01 * (peak > 0.0f ? double(peak) : 1.0);
    // 1 - uniform() lies in (0, 1], so every voxel stays positive.
    for (float& x : v) x = static_cast<float>(level * (1.0 - rng.uniform()));
  }
}

void occlude(std::vector<Heatmap3D>& frames, const OcclusionSpec& spec, std::uint64_t seed) {
  if (spec.empty()) return;
  check_occlusion(spec, frames.size(), frames.empty() ? 0 : frames.front().joint_count());
  for (std::size_t t = spec.frame_begin; t < spec.frame_end; ++t) occlude_frame(frames[t], t, spec, seed);
}

std::vector<JointPositions> interpolate_missing(const std::vector<JointPositions>& joints,
                                                const std::vector<std::vector<bool>>& valid) {
  require(valid.size() == joints.size(), ErrorCode::kDimension, "validity mask length mismatch");
  std::vector<JointPositions> out = joints;
  if (joints.empty()) return out;
  const std::size_t T = joints.size(), J = joints.front().size();
  for (std::size_t t = 0; t < T; ++t)
    require(joints[t].size() == J && valid[t].size() == J, ErrorCode::kDimension, "ragged joint sequence");
  for (std::size_t j = 0; j < J; ++j) {
    long prev = -1;
    for (std::size_t t = 0; t < T; ++t) {
      if (!valid[t][j]) continue;
      const long cur = long(t);
      if (prev < 0) {
        for (long u = 0; u < cur; ++u) out[u][j] = joints[t][j];
      } else {
        for (long u = prev + 1; u < cur; ++u) {
          const double a = double(u - prev) / double(cur - prev);
          out[u][j] = (1.0 - a) * joints[prev][j] + a * joints[cur][j];
        }
      }
      prev = cur;
    }
    require(prev >= 0, ErrorCode::kInsufficientData, "joint " + std::to_string(j) + " is never observed");
    for (std::size_t u = std::size_t(prev) + 1; u < T; ++u) out[u][j] = joints[prev][j];
  }
  return out;
}

}  // namespace oad
