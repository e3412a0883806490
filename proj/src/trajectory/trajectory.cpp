#include "oad/trajectory/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "oad/core/error.hpp"

namespace oad {

double heading_of(const Rotation& r) {
  const Vec3 forward = r * Vec3::UnitZ();
  const double horizontal = std::hypot(forward.x(), forward.z());
  if (horizontal < 1e-6) fail(ErrorCode::kDegenerateHeading, "root forward axis is vertical; heading undefined");
  return std::atan2(forward.x(), forward.z());
}

GlobalTrajectory ego_to_global(const EgoTrajectory& e) {
  require(!e.steps.empty(), ErrorCode::kInvalidInput, "ego trajectory is empty");
  GlobalTrajectory g;
  g.translations.reserve(e.steps.size());
  g.rotations.reserve(e.steps.size());
  Vec3 position = e.initial.translation;
  double heading = e.initial.heading;
  for (const EgoStep& step : e.steps) {
    position += Rotation::about_y(heading) * step.local_translation;
    heading = wrap_angle(heading + step.delta_heading);
    g.translations.push_back(position);
    g.rotations.push_back(Rotation::about_y(heading) * step.residual_rotation);
  }
  return g;
}

EgoTrajectory global_to_ego(const GlobalTrajectory& g, const EgoInitialState& initial) {
  require(g.translations.size() == g.rotations.size(), ErrorCode::kDimension,
          "global trajectory translations and rotations differ in length");
  require(!g.translations.empty(), ErrorCode::kInvalidInput, "global trajectory is empty");
  EgoTrajectory e;
  e.initial = initial;
  e.steps.reserve(g.size());
  Vec3 prev_position = initial.translation;
  double prev_heading = initial.heading;
  for (std::size_t t = 0; t < g.size(); ++t) {
    const double heading = heading_of(g.rotations[t]);
    EgoStep step;
    step.delta_heading = wrap_angle(heading - prev_heading);
    step.local_translation = Rotation::about_y(-prev_heading) * (g.translations[t] - prev_position);
    step.residual_rotation = Rotation::about_y(-heading) * g.rotations[t];
    e.steps.push_back(step);
    prev_position = g.translations[t];
    prev_heading = heading;
  }
  return e;
}

void write_trajectory(std::ostream& out, const GlobalTrajectory& g) {
  for (std::size_t t = 0; t < g.size(); ++t) {
    const Vec3& p = g.translations[t];
    const Rotation& q = g.rotations[t];
    nlohmann::json line = {{"t", {p.x(), p.y(), p.z()}}, {"q", {q.w(), q.x(), q.y(), q.z()}}};
    out << line.dump() << '\n';
  }
}

GlobalTrajectory read_trajectory(std::istream& in) {
  GlobalTrajectory g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& t = j.at("t");
      const auto& q = j.at("q");
      require(t.size() == 3 && q.size() == 4, ErrorCode::kParse, "expected t[3] and q[4]");
      g.translations.emplace_back(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
      g.rotations.push_back(
          Rotation::from_wxyz(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::kParse, "trajectory line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return g;
}

void save_trajectory(const GlobalTrajectory& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write trajectory file " + path.string());
  write_trajectory(out, g);
}

GlobalTrajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open trajectory file " + path.string());
  return read_trajectory(in);
}

}  // namespace oad
