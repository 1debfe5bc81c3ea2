#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcvr/track.hpp"
#include "rcvr/vec3.hpp"

namespace rcvr {

struct PhysicsConfig {
  double g0 = 9.80665;   // m/s^2
  double v_min = 1.0;    // m/s, speed floor (chain-lift crawl)
  double v_launch = 3.0; // m/s at the first point
  double friction = 0.0; // fractional kinetic-energy loss per metre

  /// Throws InvalidConfig.
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are MalformedSyntax.
PhysicsConfig physics_config_from_json(const nlohmann::json& doc, PhysicsConfig base = {});
nlohmann::json to_json(const PhysicsConfig& cfg);

/// Geometry of a ride before speeds and forces are known.
struct TrackGeometry {
  std::string id;
  CoasterType coaster_type = CoasterType::Normal;
  double dt = 0.1;
  std::vector<Vec3> positions;
};

struct RiderFrame {
  Vec3 forward;
  Vec3 up;
  Vec3 lateral() const { return up.cross(forward); }
};

/// Gravity-coasting speeds: energy balance from the first point with a
/// v_min floor. Throws DegenerateGeometry on repeated consecutive positions.
std::vector<double> solve_speeds(std::span<const Vec3> positions, const PhysicsConfig& cfg);

/// Forward is the normalized central difference (one-sided at the ends); up
/// is world up orthogonalized against forward, or world north when forward
/// is vertical.
std::vector<RiderFrame> rider_frames(std::span<const Vec3> positions);

/// Proper acceleration in the rider frame (longitudinal, lateral, vertical),
/// in units of g0. A rider at rest on level track reads (0, 0, +1).
///
/// Interior points use central differences: the normal part of the second
/// difference of position is rescaled to the supplied speed, the tangential
/// part comes from the central difference of speed. Endpoints copy their
/// neighbour. Throws TooShort below 3 points.
std::vector<Vec3> compute_gforces(std::span<const Vec3> positions, std::span<const double> speeds, double dt,
                                  const PhysicsConfig& cfg);

/// Fills speeds, frames, and forces from positions, then validates the track.
Track annotate(const TrackGeometry& geometry, const PhysicsConfig& cfg);
Track annotate(const Track& track, const PhysicsConfig& cfg);

/// Resamples an arbitrarily spaced path in time: the rider coasts along the
/// polyline under the same energy model and a sample is taken every dt.
/// The partial step past the last full sample is dropped.
TrackGeometry retime(std::span<const Vec3> path, double dt, const PhysicsConfig& cfg);

}  // namespace rcvr
