#include "rcvr/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rcvr/error.hpp"

namespace rcvr {

namespace {

constexpr std::array<std::string_view, kCustomFeatureCount> kCustomNames = {
    "max_speed",          "avg_speed",         "total_length",      "max_down_angle",
    "max_up_angle",       "coaster_type",      "duration",          "vertical_max_pos",
    "vertical_max_neg",   "vertical_avg_pos",  "vertical_avg_neg",  "vertical_frac_pos",
    "vertical_frac_neg",  "lateral_max_pos",   "lateral_max_neg",   "lateral_avg_pos",
    "lateral_avg_neg",    "lateral_frac_pos",  "lateral_frac_neg",  "longitudinal_max_pos",
    "longitudinal_max_neg", "longitudinal_avg_pos", "longitudinal_avg_neg", "longitudinal_frac_pos",
    "longitudinal_frac_neg",
};

constexpr std::array<std::string_view, kSequenceFeatureCount> kSequenceNames = {
    "dx", "dy", "dz", "speed", "g_longitudinal", "g_lateral", "g_vertical",
};

// Rider-frame component order on TrackPoint::gforce.
constexpr std::size_t kLongitudinalComponent = 0;
constexpr std::size_t kLateralComponent = 1;
constexpr std::size_t kVerticalComponent = 2;

double component(const Vec3& v, std::size_t i) { return i == 0 ? v.x : (i == 1 ? v.y : v.z); }

void axis_statistics(const Track& track, std::size_t which, FeatureVector& out, std::size_t base) {
  double max_pos = 0.0, max_neg = 0.0, sum_pos = 0.0, sum_neg = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& p : track.points) {
    const double g = component(p.gforce, which);
    if (g > 0.0) {
      max_pos = std::max(max_pos, g);
      sum_pos += g;
      ++n_pos;
    } else if (g < 0.0) {
      max_neg = std::max(max_neg, -g);
      sum_neg -= g;
      ++n_neg;
    }
  }
  const double n = static_cast<double>(track.points.size());
  out[base + slot::kMaxPos] = max_pos;
  out[base + slot::kMaxNeg] = max_neg;
  out[base + slot::kAvgPos] = n_pos ? sum_pos / static_cast<double>(n_pos) : 0.0;
  out[base + slot::kAvgNeg] = n_neg ? sum_neg / static_cast<double>(n_neg) : 0.0;
  out[base + slot::kFracPos] = static_cast<double>(n_pos) / n;
  out[base + slot::kFracNeg] = static_cast<double>(n_neg) / n;
}

}  // namespace

const std::array<std::string_view, kCustomFeatureCount>& custom_feature_names() { return kCustomNames; }
const std::array<std::string_view, kSequenceFeatureCount>& sequence_feature_names() { return kSequenceNames; }

FeatureVector extract_custom(const Track& track) {
  if (track.points.size() < 2) throw Error(ErrorCode::TooShort, "features need at least 2 points");
  FeatureVector out{};

  double max_speed = 0.0, sum_speed = 0.0, down = 0.0, up = 0.0;
  for (const auto& p : track.points) {
    max_speed = std::max(max_speed, p.speed);
    sum_speed += p.speed;
    const double pitch = std::asin(std::clamp(p.forward.dot(kWorldUp), -1.0, 1.0)) * 180.0 / std::numbers::pi;
    down = std::max(down, -pitch);
    up = std::max(up, pitch);
  }
  out[slot::kMaxSpeed] = max_speed;
  out[slot::kAvgSpeed] = sum_speed / static_cast<double>(track.points.size());
  out[slot::kTotalLength] = total_length(track);
  out[slot::kMaxDownAngle] = down;
  out[slot::kMaxUpAngle] = up;
  out[slot::kCoasterType] = static_cast<double>(static_cast<int>(track.coaster_type));
  out[slot::kDuration] = track.dt * static_cast<double>(track.points.size() - 1);

  axis_statistics(track, kVerticalComponent, out, slot::kVertical);
  axis_statistics(track, kLateralComponent, out, slot::kLateral);
  axis_statistics(track, kLongitudinalComponent, out, slot::kLongitudinal);
  return out;
}

PointSequence extract_sequence(const Track& track) {
  const auto deltas = relative_positions(track);
  PointSequence rows(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& next = track.points[i + 1];
    rows[i] = {deltas[i].x, deltas[i].y, deltas[i].z, next.speed, next.gforce.x, next.gforce.y, next.gforce.z};
  }
  return rows;
}

std::string features_csv(std::span<const Track> tracks) {
  std::string out = "track_id";
  for (auto name : kCustomNames) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (const auto& track : tracks) {
    out += track.id;
    for (double v : extract_custom(track)) {
      out += ',';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

Normalizer::Normalizer(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) throw Error(ErrorCode::InvariantViolation, "normalizer bounds differ in size");
}

Normalizer Normalizer::identity(std::size_t dim) {
  return Normalizer(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

void Normalizer::apply_in_place(std::span<double> x) const {
  for (std::size_t d = 0; d < x.size(); ++d) x[d] = apply(d, x[d]);
}

std::vector<double> Normalizer::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  apply_in_place(out);
  return out;
}

NormalizerFitter::NormalizerFitter(std::size_t dim)
    : lo_(dim, std::numeric_limits<double>::infinity()), hi_(dim, -std::numeric_limits<double>::infinity()) {}

void NormalizerFitter::add(std::span<const double> sample) {
  if (sample.size() != lo_.size()) throw Error(ErrorCode::InvariantViolation, "sample dimension mismatch");
  for (std::size_t d = 0; d < sample.size(); ++d) {
    lo_[d] = std::min(lo_[d], sample[d]);
    hi_[d] = std::max(hi_[d], sample[d]);
  }
  ++count_;
}

Normalizer NormalizerFitter::finish() const {
  if (count_ == 0) throw Error(ErrorCode::EmptyFit, "normalizer fitted on no samples");
  return Normalizer(lo_, hi_);
}

Normalizer fit_normalizer(std::span<const FeatureVector> vectors) {
  NormalizerFitter fitter(kCustomFeatureCount);
  for (const auto& v : vectors) fitter.add(v);
  return fitter.finish();
}

Normalizer fit_normalizer(std::span<const PointSequence> sequences) {
  NormalizerFitter fitter(kSequenceFeatureCount);
  for (const auto& seq : sequences) {
    for (const auto& row : seq) fitter.add(row);
  }
  return fitter.finish();
}

}  // namespace rcvr
