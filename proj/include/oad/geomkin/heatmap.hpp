#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "oad/core/types.hpp"

namespace oad {

/// Metric extent of a heatmap volume, meters.
struct HeatmapBounds {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;
  double z_min = -1.0, z_max = 1.0;

  Vec3 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max), 0.5 * (z_min + z_max)}; }
  Vec3 extent() const { return {x_max - x_min, y_max - y_min, z_max - z_min}; }
  bool contains(const Vec3& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max && p.z() >= z_min && p.z() <= z_max;
  }
};

/// One frame of per-joint 3-D heatmaps. Each joint volume is D x H x W
/// (z, y, x) stored depth-major: index ((z * H) + y) * W + x. The center of
/// voxel i along an axis of n voxels lies at min + (i + 0.5) / n * (max - min).
class Heatmap3D {
 public:
  Heatmap3D(std::size_t joints, std::size_t depth, std::size_t height, std::size_t width, HeatmapBounds bounds);

  std::size_t joint_count() const { return joints_; }
  std::size_t depth() const { return depth_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t voxels_per_joint() const { return depth_ * height_ * width_; }
  const HeatmapBounds& bounds() const { return bounds_; }

  float& at(std::size_t joint, std::size_t z, std::size_t y, std::size_t x) {
    return values_[offset(joint) + (z * height_ + y) * width_ + x];
  }
  float at(std::size_t joint, std::size_t z, std::size_t y, std::size_t x) const {
    return values_[offset(joint) + (z * height_ + y) * width_ + x];
  }

  /// Mutable / const view of one joint's volume.
  std::span<float> volume(std::size_t joint) { return {values_.data() + offset(joint), voxels_per_joint()}; }
  std::span<const float> volume(std::size_t joint) const {
    return {values_.data() + offset(joint), voxels_per_joint()};
  }

  Vec3 voxel_center(std::size_t z, std::size_t y, std::size_t x) const;
  /// Voxel edge lengths along x, y, z.
  Vec3 pitch() const;

  const std::vector<float>& values() const { return values_; }

 private:
  std::size_t offset(std::size_t joint) const { return joint * voxels_per_joint(); }

  std::size_t joints_, depth_, height_, width_;
  HeatmapBounds bounds_;
  std::vector<float> values_;
};

struct SoftArgmaxOptions {
  double temperature = 1.0;
};

/// Per joint: softmax over the volume of value / temperature, then the
/// expected metric voxel center. Throws kDegenerateHeatmap on an all-zero
/// volume and kInvalidInput on NaN, Inf or negative values.
PointSet soft_argmax(const Heatmap3D& h, const SoftArgmaxOptions& options = {});

/// Soft-argmax of a single joint volume.
Vec3 soft_argmax_joint(const Heatmap3D& h, std::size_t joint, const SoftArgmaxOptions& options = {});

// HM3D container: "HM3D", u32 version, u32 K_j, D, H, W, 6 f64 bounds
// (x_min, x_max, y_min, y_max, z_min, z_max), then f32 voxels depth-major per
// joint. A sequence file is a concatenation of frames.
inline constexpr std::uint32_t kHeatmapFormatVersion = 1;

void write_heatmap(std::ostream& out, const Heatmap3D& h);
Heatmap3D read_heatmap(std::istream& in);
void save_heatmaps(const std::vector<Heatmap3D>& frames, const std::filesystem::path& path);
std::vector<Heatmap3D> load_heatmaps(const std::filesystem::path& path);

}  // namespace oad
