#include "rcvr/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "rcvr/error.hpp"

namespace rcvr {

namespace {

using nlohmann::json;

double energy_speed(double height_drop, double travelled, const PhysicsConfig& cfg) {
  const double v2 = cfg.v_launch * cfg.v_launch + 2.0 * cfg.g0 * height_drop - 2.0 * cfg.friction * cfg.g0 * travelled;
  return std::max(cfg.v_min, std::sqrt(std::max(0.0, v2)));
}

Vec3 orthonormal_up(const Vec3& forward) {
  Vec3 up = kWorldUp - forward * kWorldUp.dot(forward);
  if (up.norm() < kFrameTolerance) up = kWorldNorth - forward * kWorldNorth.dot(forward);
  return up.normalized();
}

}  // namespace

void PhysicsConfig::validate() const {
  auto bad = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(g0 > 0.0) || !std::isfinite(g0)) bad("g0 > 0");
  if (!(v_min > 0.0) || !std::isfinite(v_min)) bad("v_min > 0");
  if (!(v_launch >= v_min) || !std::isfinite(v_launch)) bad("v_launch >= v_min");
  if (!(friction >= 0.0 && friction < 0.01)) bad("0 <= friction < 0.01");
}

PhysicsConfig physics_config_from_json(const json& doc, PhysicsConfig base) {
  if (!doc.is_object()) throw Error(ErrorCode::MalformedSyntax, "physics config must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number()) throw Error(ErrorCode::MalformedSyntax, "physics." + key + " must be a number");
    const double v = value.get<double>();
    if (key == "g0") base.g0 = v;
    else if (key == "v_min") base.v_min = v;
    else if (key == "v_launch") base.v_launch = v;
    else if (key == "friction") base.friction = v;
    else throw Error(ErrorCode::MalformedSyntax, "unknown physics key \"" + key + "\"");
  }
  base.validate();
  return base;
}

json to_json(const PhysicsConfig& cfg) {
  json out = json::object();
  out["g0"] = cfg.g0;
  out["v_min"] = cfg.v_min;
  out["v_launch"] = cfg.v_launch;
  out["friction"] = cfg.friction;
  return out;
}

std::vector<double> solve_speeds(std::span<const Vec3> positions, const PhysicsConfig& cfg) {
  cfg.validate();
  if (positions.size() < 2) throw Error(ErrorCode::TooShort, "speeds need at least 2 positions");
  std::vector<double> speeds(positions.size());
  speeds[0] = cfg.v_launch;
  const double h0 = positions[0].y;
  double travelled = 0.0;
  for (std::size_t i = 1; i < positions.size(); ++i) {
    const double step = (positions[i] - positions[i - 1]).norm();
    if (step == 0.0) throw Error(ErrorCode::DegenerateGeometry, "repeated consecutive positions", i);
    travelled += step;
    speeds[i] = energy_speed(h0 - positions[i].y, travelled, cfg);
  }
  return speeds;
}

std::vector<RiderFrame> rider_frames(std::span<const Vec3> positions) {
  const std::size_t n = positions.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "frames need at least 2 positions");
  std::vector<RiderFrame> frames(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    const Vec3 chord = positions[hi] - positions[lo];
    const double len = chord.norm();
    if (len == 0.0) throw Error(ErrorCode::DegenerateGeometry, "no direction of travel", i);
    frames[i].forward = chord / len;
    frames[i].up = orthonormal_up(frames[i].forward);
  }
  return frames;
}

std::vector<Vec3> compute_gforces(std::span<const Vec3> positions, std::span<const double> speeds, double dt,
                                  const PhysicsConfig& cfg) {
  cfg.validate();
  const std::size_t n = positions.size();
  if (n < 3) throw Error(ErrorCode::TooShort, "g-forces need at least 3 points");
  if (speeds.size() != n) throw Error(ErrorCode::InvariantViolation, "one speed per position");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvariantViolation, "dt > 0");

  const auto frames = rider_frames(positions);
  const Vec3 gravity{0.0, -cfg.g0, 0.0};
  std::vector<Vec3> out(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec3& f = frames[i].forward;
    const Vec3 velocity = (positions[i + 1] - positions[i - 1]) / (2.0 * dt);
    const Vec3 second = (positions[i + 1] - positions[i] * 2.0 + positions[i - 1]) / (dt * dt);
    const double sampled_speed = velocity.norm();
    Vec3 normal = second - f * second.dot(f);
    const double ratio = speeds[i] / sampled_speed;
    normal = normal * (ratio * ratio);
    const double tangential = (speeds[i + 1] - speeds[i - 1]) / (2.0 * dt);
    const Vec3 proper = f * tangential + normal - gravity;
    const Vec3 lateral = frames[i].lateral();
    out[i] = Vec3{proper.dot(f), proper.dot(lateral), proper.dot(frames[i].up)} / cfg.g0;
  }
  out[0] = out[1];
  out[n - 1] = out[n - 2];
  return out;
}

Track annotate(const TrackGeometry& geometry, const PhysicsConfig& cfg) {
  if (!(geometry.dt > 0.0)) throw Error(ErrorCode::InvariantViolation, "dt > 0");
  const auto speeds = solve_speeds(geometry.positions, cfg);
  const auto forces = compute_gforces(geometry.positions, speeds, geometry.dt, cfg);
  const auto frames = rider_frames(geometry.positions);

  Track track;
  track.id = geometry.id;
  track.coaster_type = geometry.coaster_type;
  track.dt = geometry.dt;
  track.points.resize(geometry.positions.size());
  for (std::size_t i = 0; i < track.points.size(); ++i) {
    auto& p = track.points[i];
    p.position = geometry.positions[i];
    p.forward = frames[i].forward;
    p.up = frames[i].up;
    p.speed = speeds[i];
    p.gforce = forces[i];
  }
  validate(track);
  return track;
}

Track annotate(const Track& track, const PhysicsConfig& cfg) {
  TrackGeometry geometry{track.id, track.coaster_type, track.dt, {}};
  geometry.positions.reserve(track.points.size());
  for (const auto& p : track.points) geometry.positions.push_back(p.position);
  return annotate(geometry, cfg);
}

TrackGeometry retime(std::span<const Vec3> path, double dt, const PhysicsConfig& cfg) {
  cfg.validate();
  if (!(dt > 0.0)) throw Error(ErrorCode::InvariantViolation, "dt > 0");
  if (path.size() < 2) throw Error(ErrorCode::TooShort, "path needs at least 2 points");

  std::vector<double> arc(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) arc[i] = arc[i - 1] + (path[i] - path[i - 1]).norm();
  const double total = arc.back();
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "path has zero length");

  std::size_t cursor = 0;
  auto locate = [&](double s) {
    while (cursor + 1 < arc.size() - 1 && arc[cursor + 1] < s) ++cursor;
    while (cursor > 0 && arc[cursor] > s) --cursor;
    const double span = arc[cursor + 1] - arc[cursor];
    const double t = span > 0.0 ? std::clamp((s - arc[cursor]) / span, 0.0, 1.0) : 0.0;
    return path[cursor] + (path[cursor + 1] - path[cursor]) * t;
  };
  const double h0 = path.front().y;
  auto speed_at = [&](double s) { return energy_speed(h0 - locate(s).y, s, cfg); };

  TrackGeometry out;
  out.dt = dt;
  out.positions.push_back(path.front());
  double s = 0.0;
  while (true) {
    const double v1 = speed_at(s);
    const double v2 = speed_at(std::min(total, s + 0.5 * v1 * dt));
    const double next = s + v2 * dt;
    if (next > total) break;
    s = next;
    out.positions.push_back(locate(s));
  }
  if (out.positions.size() < 2) throw Error(ErrorCode::TooShort, "path shorter than one time step");
  return out;
}

}  // namespace rcvr
