#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rcvr/vec3.hpp"

namespace rcvr {

/// Coaster category; stored on disk as its integer code.
enum class CoasterType : int { Gentle = 0, Normal = 1, Extreme = 2 };

/// One time sample of a ride.
///
/// `gforce` is in the rider frame (longitudinal, lateral, vertical) and in
/// units of standard gravity.
struct TrackPoint {
  Vec3 position;
  Vec3 forward{1.0, 0.0, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  double speed = 0.0;
  Vec3 gforce;

  bool operator==(const TrackPoint&) const = default;
};

/// A ride sampled uniformly in time every `dt` seconds.
struct Track {
  std::string id;
  CoasterType coaster_type = CoasterType::Normal;
  double dt = 0.1;
  std::vector<TrackPoint> points;

  bool operator==(const Track&) const = default;
};

inline constexpr int kTrackFormatVersion = 1;
inline constexpr double kFrameTolerance = 1e-6;
inline constexpr double kSamplingSlack = 1.25;

/// Throws Error(InvariantViolation) naming the first failing invariant and,
/// for per-point invariants, the point index.
void validate(const Track& track);

/// Parses the `.rcvr.json` text format and validates the result.
Track parse_track(std::string_view text);

/// Same as parse_track, over an already-parsed document.
Track track_from_json(const nlohmann::json& doc);

/// Canonical text: fixed key order, numbers printed with 17 significant digits.
std::string serialize_track(const Track& track);

Track load_track(const std::string& path);
void save_track(const Track& track, const std::string& path);

/// Element i is position[i+1] - position[i]. Throws TooShort below 2 points.
std::vector<Vec3> relative_positions(const Track& track);

/// Sum of the lengths of consecutive position deltas.
double total_length(const Track& track);

/// Formats a double with 17 significant digits; the canonical number format
/// for every text file the toolkit writes by hand.
std::string format_number(double value);

}  // namespace rcvr
