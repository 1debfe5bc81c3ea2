#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "json.hpp"
#include "rcvr/features.hpp"
#include "rcvr/kinematics.hpp"
#include "rcvr/ratings.hpp"
#include "rcvr/track.hpp"

namespace rcvr {

enum class Segment : int { Hill = 0, Drop = 1, FlatTurn = 2, Helix = 3, Loop = 4 };
inline constexpr std::size_t kSegmentKinds = 5;

/// Relative draw weights of each segment kind, indexed by Segment.
using SegmentWeights = std::array<double, kSegmentKinds>;

struct GeneratorConfig {
  std::uint64_t seed = 2018;
  int n_tracks = 33;
  int n_users = 23;
  int n_ratings = 100;
  /// Indexed by CoasterType.
  std::array<SegmentWeights, 3> palette{{
      {3.0, 1.0, 3.0, 1.0, 0.0},  // gentle
      {3.0, 2.0, 2.0, 2.0, 0.5},  // normal
      {2.0, 3.0, 1.0, 2.0, 2.0},  // extreme
  }};
  double susceptibility_spread = 0.3;  // per-user offset on nausea and intensity, uniform in +-spread
  double noise_spread = 0.3;           // per-rating offset, uniform in +-spread
  double dt = 0.1;
  PhysicsConfig physics;

  /// Throws ConfigInfeasible for rating counts that cannot cover every
  /// track, InvalidConfig otherwise.
  void validate() const;
};

/// latent_c = clamp(intercept_c + sum_j weight_c[j] * feature_j, 1, 5)
struct OracleCoefficients {
  std::array<double, kCategoryCount> intercept{};
  std::array<FeatureVector, kCategoryCount> weights{};

  /// The published default table.
  static OracleCoefficients defaults();
  /// Finite values; nausea weights nonnegative on every g-force slot.
  void validate() const;
  bool operator==(const OracleCoefficients&) const = default;
};

nlohmann::ordered_json to_json(const OracleCoefficients& oracle);
OracleCoefficients oracle_from_json(const nlohmann::json& doc);

/// 6-20 palette segments joined with continuous tangents, retimed at dt and
/// annotated. Gentle rides keep |pitch| <= 25 degrees; extreme rides open
/// with a drop of at least 15 m. Throws GenerationFailed after 10 rejected
/// attempts.
Track generate_track(std::uint64_t seed, CoasterType type, const GeneratorConfig& cfg = {});

std::array<double, kCategoryCount> oracle_latents(const Track& track, const OracleCoefficients& oracle);
std::array<double, kCategoryCount> oracle_latents(const FeatureVector& features, const OracleCoefficients& oracle);

/// Every track receives at least one rating; the remaining ratings go to
/// random (track, user) pairs. Deterministic in cfg.seed.
Dataset simulate_ratings(std::span<const Track> tracks, const GeneratorConfig& cfg, const OracleCoefficients& oracle);

/// cfg.n_tracks tracks with cycling coaster types, then simulated ratings.
Dataset generate_dataset(const GeneratorConfig& cfg, const OracleCoefficients& oracle);

/// Writes tracks/, manifest.json and oracle-coefficients.json under dir.
void write_synthetic_dataset(const Dataset& dataset, const OracleCoefficients& oracle, const std::string& dir);

}  // namespace rcvr
