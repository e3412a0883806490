#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "oad/geomkin/kinematics.hpp"
#include "oad/trajectory/trajectory.hpp"

namespace oad {

struct ChannelGroup {
  std::string name;
  std::size_t width = 0;
};

/// Ordered channel groups of a feature row.
struct FeatureLayout {
  std::vector<ChannelGroup> groups;

  std::size_t width() const;
  /// Column offset of a named group; throws kInvalidInput if absent.
  std::size_t offset(const std::string& name) const;
  std::size_t width_of(const std::string& name) const;
  bool has(const std::string& name) const;

  static FeatureLayout standard(std::size_t joints, bool with_acceleration = true);
  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

inline bool operator==(const ChannelGroup& a, const ChannelGroup& b) {
  return a.name == b.name && a.width == b.width;
}

/// Frame-major feature matrix (frames x D_p).
struct MotionSequence {
  Matrix frames;
  double fps = 30.0;
  FeatureLayout layout;

  std::size_t frame_count() const { return static_cast<std::size_t>(frames.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(frames.cols()); }
  /// Throws kInvalidInput on non-finite values, too few frames or a layout
  /// width that does not match the matrix.
  void validate() const;
};

struct FeatureOptions {
  bool with_acceleration = true;
};

/// Central differences along rows. Order 1: (x[t+1] - x[t-1]) / 2, order 2:
/// x[t+1] - 2 x[t] + x[t-1]. Both drop the first and last row.
Matrix finite_difference(const Matrix& series, int order);

/// Heading-local features from global joint positions and root trajectory.
/// Velocities are per frame. Output has two fewer frames than the input.
MotionSequence extract_features(const std::vector<JointPositions>& joints, const GlobalTrajectory& traj, double fps,
                                const FeatureOptions& options = {});

// Header line {"dp","fps","layout"} followed by one JSON array per frame.
void write_motion(std::ostream& out, const MotionSequence& m);
MotionSequence read_motion(std::istream& in);
void save_motion(const MotionSequence& m, const std::filesystem::path& path);
MotionSequence load_motion(const std::filesystem::path& path);

}  // namespace oad
