#include "oad/geomkin/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "oad/core/binary_io.hpp"
#include "oad/core/error.hpp"

namespace oad {

Heatmap3D::Heatmap3D(std::size_t joints, std::size_t depth, std::size_t height, std::size_t width,
                     HeatmapBounds bounds)
    : joints_(joints), depth_(depth), height_(height), width_(width), bounds_(bounds) {
  require(joints > 0 && depth > 0 && height > 0 && width > 0, ErrorCode::kDimension, "heatmap dimensions must be positive");
  require(bounds.x_max > bounds.x_min && bounds.y_max > bounds.y_min && bounds.z_max > bounds.z_min,
          ErrorCode::kInvalidInput, "heatmap bounds must have positive extent");
  values_.assign(joints * voxels_per_joint(), 0.0f);
}

Vec3 Heatmap3D::voxel_center(std::size_t z, std::size_t y, std::size_t x) const {
  const auto c = [](double lo, double hi, std::size_t i, std::size_t n) {
    return lo + (static_cast<double>(i) + 0.5) / static_cast<double>(n) * (hi - lo);
  };
  return {c(bounds_.x_min, bounds_.x_max, x, width_), c(bounds_.y_min, bounds_.y_max, y, height_),
          c(bounds_.z_min, bounds_.z_max, z, depth_)};
}

Vec3 Heatmap3D::pitch() const {
  const Vec3 e = bounds_.extent();
  return {e.x() / width_, e.y() / height_, e.z() / depth_};
}

Vec3 soft_argmax_joint(const Heatmap3D& h, std::size_t joint, const SoftArgmaxOptions& options) {
  require(options.temperature > 0.0, ErrorCode::kInvalidInput, "soft-argmax temperature must be positive");
  require(joint < h.joint_count(), ErrorCode::kDimension, "joint index out of range");
  const auto vol = h.volume(joint);
  float peak = 0.0f;
  for (float v : vol) {
    if (!std::isfinite(v) || v < 0.0f) {
      fail(ErrorCode::kInvalidInput, "heatmap of joint " + std::to_string(joint) + " has a negative or non-finite value");
    }
    peak = std::max(peak, v);
  }
  if (peak == 0.0f) fail(ErrorCode::kDegenerateHeatmap, "heatmap of joint " + std::to_string(joint) + " is all zero");

  // Separable accumulation: marginal weights per axis, then expectations of
  // the voxel-center coordinates.
  const double inv_t = 1.0 / options.temperature;
  std::vector<double> wz(h.depth(), 0.0), wy(h.height(), 0.0), wx(h.width(), 0.0);
  double total = 0.0;
  std::size_t idx = 0;
  for (std::size_t z = 0; z < h.depth(); ++z) {
    for (std::size_t y = 0; y < h.height(); ++y) {
      for (std::size_t x = 0; x < h.width(); ++x, ++idx) {
        const double w = std::exp((static_cast<double>(vol[idx]) - peak) * inv_t);
        wz[z] += w;
        wy[y] += w;
        wx[x] += w;
        total += w;
      }
    }
  }
  Vec3 expectation = Vec3::Zero();
  for (std::size_t x = 0; x < h.width(); ++x) expectation.x() += wx[x] * h.voxel_center(0, 0, x).x();
  for (std::size_t y = 0; y < h.height(); ++y) expectation.y() += wy[y] * h.voxel_center(0, y, 0).y();
  for (std::size_t z = 0; z < h.depth(); ++z) expectation.z() += wz[z] * h.voxel_center(z, 0, 0).z();
  expectation /= total;

  // Rounding can push a coordinate a few ulps past a bound.
  const auto& b = h.bounds();
  expectation.x() = std::clamp(expectation.x(), b.x_min, b.x_max);
  expectation.y() = std::clamp(expectation.y(), b.y_min, b.y_max);
  expectation.z() = std::clamp(expectation.z(), b.z_min, b.z_max);
  return expectation;
}

PointSet soft_argmax(const Heatmap3D& h, const SoftArgmaxOptions& options) {
  PointSet out(h.joint_count());
  for (std::size_t j = 0; j < h.joint_count(); ++j) out[j] = soft_argmax_joint(h, j, options);
  return out;
}

void write_heatmap(std::ostream& out, const Heatmap3D& h) {
  binio::write_magic(out, "HM3D");
  binio::write_u32(out, kHeatmapFormatVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(h.joint_count()));
  binio::write_u32(out, static_cast<std::uint32_t>(h.depth()));
  binio::write_u32(out, static_cast<std::uint32_t>(h.height()));
  binio::write_u32(out, static_cast<std::uint32_t>(h.width()));
  const auto& b = h.bounds();
  for (double v : {b.x_min, b.x_max, b.y_min, b.y_max, b.z_min, b.z_max}) binio::write_f64(out, v);
  for (float v : h.values()) binio::write_f32(out, v);
}

Heatmap3D read_heatmap(std::istream& in) {
  binio::expect_magic(in, "HM3D", "heatmap");
  const std::uint32_t version = binio::read_u32(in);
  require(version == kHeatmapFormatVersion, ErrorCode::kParse, "unsupported heatmap version " + std::to_string(version));
  const std::uint32_t k = binio::read_u32(in);
  const std::uint32_t d = binio::read_u32(in);
  const std::uint32_t hh = binio::read_u32(in);
  const std::uint32_t w = binio::read_u32(in);
  require(k > 0 && d > 0 && hh > 0 && w > 0 && static_cast<std::uint64_t>(k) * d * hh * w < (1ULL << 31),
          ErrorCode::kParse, "heatmap header has invalid dimensions");
  HeatmapBounds b;
  b.x_min = binio::read_f64(in);
  b.x_max = binio::read_f64(in);
  b.y_min = binio::read_f64(in);
  b.y_max = binio::read_f64(in);
  b.z_min = binio::read_f64(in);
  b.z_max = binio::read_f64(in);
  Heatmap3D h(k, d, hh, w, b);
  for (std::size_t j = 0; j < k; ++j)
    for (float& v : h.volume(j)) v = binio::read_f32(in);
  return h;
}

void save_heatmaps(const std::vector<Heatmap3D>& frames, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write heatmap file " + path.string());
  for (const auto& f : frames) write_heatmap(out, f);
}

std::vector<Heatmap3D> load_heatmaps(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open heatmap file " + path.string());
  std::vector<Heatmap3D> frames;
  while (in.peek() != std::char_traits<char>::eof()) frames.push_back(read_heatmap(in));
  return frames;
}

}  // namespace oad
