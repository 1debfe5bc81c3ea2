#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "rcvr/kinematics.hpp"
#include "rcvr/random.hpp"
#include "rcvr/track.hpp"

namespace rcvr::test {

inline constexpr double kPi = 3.14159265358979323846;

/// Level straight line along +x, sampled every v*dt, annotated with v_launch = v.
inline Track flat_track(double v, int n, double dt = 0.1) {
  TrackGeometry geo;
  geo.id = "flat";
  geo.coaster_type = CoasterType::Gentle;
  geo.dt = dt;
  for (int i = 0; i < n; ++i) geo.positions.push_back({v * dt * i, 0.0, 0.0});
  PhysicsConfig cfg;
  cfg.v_launch = v;
  return annotate(geo, cfg);
}

/// Random smooth wiggle: sums of sinusoids in plan and height, retimed under
/// the default physics. Always a valid track.
inline Track random_track(Rng& rng, const std::string& id) {
  const double ax = rng.uniform(5.0, 20.0), az = rng.uniform(5.0, 20.0), ay = rng.uniform(1.0, 8.0);
  const double fx = rng.uniform(0.01, 0.03), fz = rng.uniform(0.01, 0.03), fy = rng.uniform(0.02, 0.05);
  std::vector<Vec3> path;
  for (int i = 0; i <= 4000; ++i) {
    const double s = 0.05 * i;
    path.push_back({s + ax * std::sin(fx * s), -ay * (1.0 - std::cos(fy * s)) - 0.02 * s, az * std::sin(fz * s)});
  }
  TrackGeometry geo = retime(path, 0.1, PhysicsConfig{});
  geo.id = id;
  geo.coaster_type = static_cast<CoasterType>(rng.index(3));
  return annotate(geo, PhysicsConfig{});
}

/// Fresh empty directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("rcvr-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

/// Directory holding the checked-in golden corpus.
inline std::filesystem::path golden_dir() { return std::filesystem::path(RCVR_GOLDEN_DIR); }

}  // namespace rcvr::test
