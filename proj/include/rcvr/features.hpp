#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcvr/track.hpp"

namespace rcvr {

inline constexpr std::size_t kCustomFeatureCount = 25;
inline constexpr std::size_t kSequenceFeatureCount = 7;

/// Fixed-order ride summary. Slot indices below are zero-based.
///
///   0 max speed (m/s)            1 average speed (m/s)      2 total length (m)
///   3 max downward pitch (deg)   4 max upward pitch (deg)   5 coaster type code
///   6 ride duration (s)
///   7..12  vertical g:     max +, max - (magnitude), avg +, avg - (magnitude),
///                          fraction +, fraction -
///   13..18 lateral g:      same six statistics
///   19..24 longitudinal g: same six statistics
using FeatureVector = std::array<double, kCustomFeatureCount>;

/// One row per consecutive point pair: relative position (3), then the speed
/// and rider-frame g-force of the later point.
using SequenceRow = std::array<double, kSequenceFeatureCount>;
using PointSequence = std::vector<SequenceRow>;

namespace slot {
inline constexpr std::size_t kMaxSpeed = 0;
inline constexpr std::size_t kAvgSpeed = 1;
inline constexpr std::size_t kTotalLength = 2;
inline constexpr std::size_t kMaxDownAngle = 3;
inline constexpr std::size_t kMaxUpAngle = 4;
inline constexpr std::size_t kCoasterType = 5;
inline constexpr std::size_t kDuration = 6;
inline constexpr std::size_t kVertical = 7;
inline constexpr std::size_t kLateral = 13;
inline constexpr std::size_t kLongitudinal = 19;
// Offsets within an axis block.
inline constexpr std::size_t kMaxPos = 0;
inline constexpr std::size_t kMaxNeg = 1;
inline constexpr std::size_t kAvgPos = 2;
inline constexpr std::size_t kAvgNeg = 3;
inline constexpr std::size_t kFracPos = 4;
inline constexpr std::size_t kFracNeg = 5;
}  // namespace slot

const std::array<std::string_view, kCustomFeatureCount>& custom_feature_names();
const std::array<std::string_view, kSequenceFeatureCount>& sequence_feature_names();

FeatureVector extract_custom(const Track& track);
PointSequence extract_sequence(const Track& track);

/// Header plus one row per track; first column is the track id.
std::string features_csv(std::span<const Track> tracks);

/// Per-dimension min-max map onto [0, 1] fitted on a sample set. Dimensions
/// with zero range map every value to 0.5.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(std::vector<double> lo, std::vector<double> hi);

  /// lo = 0, hi = 1: leaves values untouched.
  static Normalizer identity(std::size_t dim);

  std::size_t dim() const { return lo_.size(); }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }

  double apply(std::size_t d, double x) const {
    const double range = hi_[d] - lo_[d];
    return range > 0.0 ? (x - lo_[d]) / range : 0.5;
  }
  void apply_in_place(std::span<double> x) const;
  std::vector<double> apply(std::span<const double> x) const;

  bool operator==(const Normalizer&) const = default;

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

/// Streams samples in; finish() throws EmptyFit when nothing was added.
class NormalizerFitter {
 public:
  explicit NormalizerFitter(std::size_t dim);
  void add(std::span<const double> sample);
  std::size_t count() const { return count_; }
  Normalizer finish() const;

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::size_t count_ = 0;
};

Normalizer fit_normalizer(std::span<const FeatureVector> vectors);
/// Fits on every row of every sequence.
Normalizer fit_normalizer(std::span<const PointSequence> sequences);

}  // namespace rcvr
