#include "oad/motionfeat/features.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "oad/core/error.hpp"

namespace oad {

namespace {

constexpr const char* kRootAngular = "root_angular_velocity";
constexpr const char* kRootLinear = "root_linear_velocity";
constexpr const char* kRootHeight = "root_height";
constexpr const char* kJointPositions = "joint_positions";
constexpr const char* kJointVelocities = "joint_velocities";
constexpr const char* kJointAccelerations = "joint_accelerations";

void put(Matrix& m, Eigen::Index row, std::size_t col, const Vec3& v) {
  m.block<1, 3>(row, static_cast<Eigen::Index>(col)) = v.transpose();
}

}  // namespace

std::size_t FeatureLayout::width() const {
  std::size_t w = 0;
  for (const auto& g : groups) w += g.width;
  return w;
}

bool FeatureLayout::has(const std::string& name) const {
  for (const auto& g : groups)
    if (g.name == name) return true;
  return false;
}

std::size_t FeatureLayout::offset(const std::string& name) const {
  std::size_t at = 0;
  for (const auto& g : groups) {
    if (g.name == name) return at;
    at += g.width;
  }
  fail(ErrorCode::kInvalidInput, "layout has no channel group '" + name + "'");
}

std::size_t FeatureLayout::width_of(const std::string& name) const {
  for (const auto& g : groups)
    if (g.name == name) return g.width;
  fail(ErrorCode::kInvalidInput, "layout has no channel group '" + name + "'");
}

FeatureLayout FeatureLayout::standard(std::size_t joints, bool with_acceleration) {
  require(joints >= 1, ErrorCode::kInvalidInput, "layout needs at least one joint");
  FeatureLayout l;
  l.groups = {{kRootAngular, 1},
              {kRootLinear, 3},
              {kRootHeight, 1},
              {kJointPositions, 3 * (joints - 1)},
              {kJointVelocities, 3 * joints}};
  if (with_acceleration) l.groups.push_back({kJointAccelerations, 3 * joints});
  return l;
}

void MotionSequence::validate() const {
  require(frames.rows() >= 2, ErrorCode::kInvalidInput, "motion sequence needs at least 2 frames");
  require(fps > 0.0 && std::isfinite(fps), ErrorCode::kInvalidInput, "fps must be positive");
  require(layout.width() == dim(), ErrorCode::kInvalidInput,
          "layout width " + std::to_string(layout.width()) + " does not match D_p " + std::to_string(dim()));
  require(frames.allFinite(), ErrorCode::kInvalidInput, "motion sequence contains non-finite values");
}

Matrix finite_difference(const Matrix& series, int order) {
  require(order == 1 || order == 2, ErrorCode::kInvalidInput, "finite difference order must be 1 or 2");
  const Eigen::Index t = series.rows();
  require(t >= 3, ErrorCode::kInsufficientData, "central differences need at least 3 rows");
  const auto next = series.bottomRows(t - 2);
  const auto prev = series.topRows(t - 2);
  if (order == 1) return (next - prev) * 0.5;
  return next - 2.0 * series.middleRows(1, t - 2) + prev;
}

MotionSequence extract_features(const std::vector<JointPositions>& joints, const GlobalTrajectory& traj, double fps,
                                const FeatureOptions& options) {
  require(fps > 0.0 && std::isfinite(fps), ErrorCode::kInvalidInput, "fps must be positive");
  require(joints.size() == traj.size() && traj.translations.size() == traj.rotations.size(), ErrorCode::kDimension,
          "joint sequence has " + std::to_string(joints.size()) + " frames but trajectory has " +
              std::to_string(traj.size()));
  require(joints.size() >= 3, ErrorCode::kInsufficientData, "feature extraction needs at least 3 frames");
  const std::size_t k = joints.front().size();
  require(k >= 1, ErrorCode::kDimension, "frames have no joints");
  for (const auto& frame : joints)
    require(frame.size() == k, ErrorCode::kDimension, "joint count varies across frames");

  const auto frames = static_cast<Eigen::Index>(joints.size());
  Matrix global(frames, static_cast<Eigen::Index>(3 * k));
  Matrix root(frames, 3);
  Matrix heading(frames, 1);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    for (std::size_t j = 0; j < k; ++j) put(global, t, 3 * j, joints[ut][j]);
    root.row(t) = traj.translations[ut].transpose();
    heading(t, 0) = heading_of(traj.rotations[ut]);
  }
  // Unwrap so that differences across the +-pi seam stay small.
  for (Eigen::Index t = 1; t < frames; ++t)
    heading(t, 0) = heading(t - 1, 0) + wrap_angle(heading(t, 0) - heading(t - 1, 0));

  const Matrix joint_vel = finite_difference(global, 1);
  const Matrix joint_acc = finite_difference(global, 2);
  const Matrix root_vel = finite_difference(root, 1);
  const Matrix yaw_rate = finite_difference(heading, 1);

  MotionSequence m;
  m.fps = fps;
  m.layout = FeatureLayout::standard(k, options.with_acceleration);
  const std::size_t o_lin = m.layout.offset(kRootLinear);
  const std::size_t o_h = m.layout.offset(kRootHeight);
  const std::size_t o_pos = m.layout.offset(kJointPositions);
  const std::size_t o_vel = m.layout.offset(kJointVelocities);
  m.frames.resize(frames - 2, static_cast<Eigen::Index>(m.layout.width()));

  for (Eigen::Index r = 0; r < frames - 2; ++r) {
    const Eigen::Index t = r + 1;
    const auto ut = static_cast<std::size_t>(t);
    const Mat3 to_local = Rotation::about_y(-heading(t, 0)).matrix();
    m.frames(r, 0) = yaw_rate(r, 0);
    put(m.frames, r, o_lin, to_local * root_vel.row(r).transpose());
    m.frames(r, static_cast<Eigen::Index>(o_h)) = traj.translations[ut].y();
    const Vec3& pelvis = joints[ut][0];
    for (std::size_t j = 1; j < k; ++j) put(m.frames, r, o_pos + 3 * (j - 1), to_local * (joints[ut][j] - pelvis));
    for (std::size_t j = 0; j < k; ++j) {
      const auto c = static_cast<Eigen::Index>(3 * j);
      put(m.frames, r, o_vel + 3 * j, to_local * joint_vel.block<1, 3>(r, c).transpose());
      if (options.with_acceleration)
        put(m.frames, r, o_vel + 3 * k + 3 * j, to_local * joint_acc.block<1, 3>(r, c).transpose());
    }
  }
  require(m.frames.allFinite(), ErrorCode::kInvalidInput, "non-finite input produced non-finite features");
  return m;
}

void write_motion(std::ostream& out, const MotionSequence& m) {
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& g : m.layout.groups) layout.push_back({{"name", g.name}, {"width", g.width}});
  out << nlohmann::json{{"dp", m.dim()}, {"fps", m.fps}, {"layout", layout}}.dump() << '\n';
  for (Eigen::Index r = 0; r < m.frames.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.frames.cols(); ++c) row.push_back(m.frames(r, c));
    out << row.dump() << '\n';
  }
}

MotionSequence read_motion(std::istream& in) {
  MotionSequence m;
  std::string line;
  try {
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::kParse, "motion file is empty");
    const auto header = nlohmann::json::parse(line);
    const auto dp = header.at("dp").get<std::size_t>();
    m.fps = header.at("fps").get<double>();
    for (const auto& g : header.at("layout"))
      m.layout.groups.push_back({g.at("name").get<std::string>(), g.at("width").get<std::size_t>()});
    require(m.layout.width() == dp, ErrorCode::kParse, "layout width does not match dp");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto row = nlohmann::json::parse(line).get<std::vector<double>>();
      require(row.size() == dp, ErrorCode::kParse, "motion frame has wrong width");
      rows.push_back(std::move(row));
    }
    m.frames.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dp));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < dp; ++c)
        m.frames(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("motion file: ") + e.what());
  }
  return m;
}

void save_motion(const MotionSequence& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  write_motion(out, m);
}

MotionSequence load_motion(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot read " + path.string());
  return read_motion(in);
}

}  // namespace oad
