#include "rcvr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <set>

#include "rcvr/error.hpp"
#include "rcvr/io.hpp"
#include "rcvr/random.hpp"

namespace rcvr {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;
constexpr double kPathSpacing = 0.05;  // metres between dense path samples
constexpr int kMaxAttempts = 10;
constexpr double kGentlePitchLimit = 25.0;
constexpr double kExtremeFirstDrop = 15.0;

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

// Per-type design envelope. Curve radii and run lengths are sized from the
// speed the rider will have there so each type stays near its load targets.
struct Style {
  int min_segments, max_segments;
  double depth_cap;                 // deepest point below the start, m
  double drop_lo, drop_hi;          // drop height range, m
  double vertical_lo, vertical_hi;  // extra vertical load at dips, g
  double lateral_lo, lateral_hi;    // turn load, g
  double max_grade;                 // tan of the steepest pitch allowed
  double loop_load;                 // loop entry load, g (0: no loops)
  double climb_lo, climb_hi;        // share of depth regained when out of room
};

constexpr std::array<Style, 3> kStyles = {{
    {6, 10, 9.0, 2.0, 5.0, 0.3, 0.8, 0.4, 1.0, 0.40, 0.0, 0.3, 0.6},
    {8, 14, 22.0, 5.0, 12.0, 0.8, 1.8, 0.8, 1.8, 1.20, 4.5, 0.3, 0.6},
    {10, 20, 42.0, 15.0, 30.0, 1.5, 3.5, 1.5, 3.0, 3.00, 4.0, 0.1, 0.25},
}};

// Turtle that lays down a dense polyline; every segment starts and ends level
// so consecutive segments join with a continuous tangent.
class PathBuilder {
 public:
  explicit PathBuilder(double yaw) : yaw_(yaw) { points_.push_back(position_); }

  double depth() const { return -position_.y; }
  const std::vector<Vec3>& points() const { return points_; }

  void flat_turn(double radius, double angle) { helix(radius, angle, 0.0); }

  void helix(double radius, double angle, double descent) {
    const double sweep = std::abs(angle);
    const double side = angle >= 0.0 ? 1.0 : -1.0;
    emit(radius * sweep + descent, [&](double u) {
      const double th = u * sweep;
      const double c = -descent * (u - std::sin(2.0 * kPi * u) / (2.0 * kPi));
      return Vec3{radius * std::sin(th), c, side * radius * (1.0 - std::cos(th))};
    });
    yaw_ += angle;
  }

  void hill(double run, double height) {
    emit(run + 2.0 * height, [&](double u) {
      return Vec3{u * run, height * (1.0 - std::cos(2.0 * kPi * u)) / 2.0, 0.0};
    });
  }

  // Negative depth climbs.
  void drop(double run, double depth) {
    emit(run + std::abs(depth), [&](double u) {
      return Vec3{u * run, -depth * (1.0 - std::cos(kPi * u)) / 2.0, 0.0};
    });
  }

  void loop(double radius, double offset) {
    emit(2.0 * kPi * radius + std::abs(offset), [&](double u) {
      const double th = 2.0 * kPi * u;
      return Vec3{radius * std::sin(th), radius * (1.0 - std::cos(th)), offset * (th - std::sin(th)) / (2.0 * kPi)};
    });
  }

 private:
  // shape(u) for u in [0, 1] gives (forward, up, left) offsets in the local frame.
  template <typename Shape>
  void emit(double length_estimate, Shape shape) {
    const Vec3 heading{std::cos(yaw_), 0.0, std::sin(yaw_)};
    const Vec3 left{-std::sin(yaw_), 0.0, std::cos(yaw_)};
    const int steps = std::max(8, static_cast<int>(std::ceil(length_estimate / kPathSpacing)));
    const Vec3 origin = position_;
    for (int i = 1; i <= steps; ++i) {
      const Vec3 local = shape(static_cast<double>(i) / steps);
      points_.push_back(origin + heading * local.x + kWorldUp * local.y + left * local.z);
    }
    position_ = points_.back();
  }

  Vec3 position_{};
  double yaw_;
  std::vector<Vec3> points_;
};

std::vector<Vec3> compose_path(Rng& rng, CoasterType type, const GeneratorConfig& cfg) {
  const auto t = static_cast<std::size_t>(type);
  const Style& st = kStyles[t];
  const auto& weights = cfg.palette[t];
  const PhysicsConfig& phys = cfg.physics;
  const double g = phys.g0;

  PathBuilder b(rng.uniform(0.0, 2.0 * kPi));
  const int segments =
      st.min_segments + static_cast<int>(rng.index(static_cast<std::uint64_t>(st.max_segments - st.min_segments + 1)));

  auto speed_sq = [&](double depth) { return phys.v_launch * phys.v_launch + 2.0 * g * std::max(0.0, depth); };
  auto vertical_load = [&] { return rng.uniform(st.vertical_lo, st.vertical_hi); };

  // Cosine profile of height d over run L peaks at curvature pi^2 d / (2 L^2).
  auto add_drop = [&](double d) {
    const double v2 = speed_sq(b.depth() + std::max(d, 0.0));
    const double by_load = std::sqrt(kPi * kPi * std::abs(d) * v2 / (2.0 * g * vertical_load()));
    const double by_grade = kPi * std::abs(d) / (2.0 * st.max_grade);
    b.drop(std::max({by_load, by_grade, 4.0}), d);
  };
  auto add_descent = [&] {
    const double room = st.depth_cap - b.depth();
    if (room >= st.drop_lo) {
      add_drop(rng.uniform(st.drop_lo, std::min(st.drop_hi, room)));
    } else {
      add_drop(-rng.uniform(st.climb_lo, st.climb_hi) * b.depth());
    }
  };
  auto turn_radius = [&](double v2) { return std::max(6.0, v2 / (g * rng.uniform(st.lateral_lo, st.lateral_hi))); };

  // Coasting rides need a drop before anything else can happen.
  if (type == CoasterType::Extreme) {
    add_drop(rng.uniform(std::max(kExtremeFirstDrop + 2.0, st.depth_cap * 0.6), st.depth_cap * 0.9));
  } else {
    add_drop(rng.uniform(st.drop_lo, st.drop_hi));
  }

  for (int s = 1; s < segments; ++s) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double v2 = speed_sq(b.depth());
    switch (static_cast<Segment>(rng.weighted(weights))) {
      case Segment::Hill: {
        const double h = rng.uniform(0.3, 0.7) * b.depth();
        if (h < 1.0) {
          add_descent();
          break;
        }
        // 2 pi^2 h / L^2 peak curvature at the valleys, taken at entry speed.
        const double by_load = std::sqrt(2.0 * kPi * kPi * h * v2 / (g * vertical_load()));
        const double by_grade = kPi * h / st.max_grade;
        b.hill(std::max(by_load, by_grade), h);
        break;
      }
      case Segment::Drop:
        add_descent();
        break;
      case Segment::FlatTurn:
        b.flat_turn(turn_radius(v2), sign * rng.uniform(40.0, 150.0) * kPi / 180.0);
        break;
      case Segment::Helix: {
        const double r = turn_radius(v2);
        const double sweep = rng.uniform(180.0, 360.0) * kPi / 180.0;
        const double room = std::max(0.0, st.depth_cap - b.depth());
        const double descent = std::min(room, rng.uniform(0.2, 0.5) * st.max_grade * r * sweep / 2.0);
        b.helix(r, sign * sweep, std::min(descent, 0.35 * r * sweep * std::min(st.max_grade, 0.4)));
        break;
      }
      case Segment::Loop: {
        if (st.loop_load <= 0.0) {
          add_descent();
          break;
        }
        b.loop(std::max(5.0, v2 / (g * st.loop_load)), sign * 4.0);
        break;
      }
    }
  }
  return b.points();
}

double max_abs_pitch(const Track& track) {
  const auto f = extract_custom(track);
  return std::max(f[slot::kMaxDownAngle], f[slot::kMaxUpAngle]);
}

constexpr std::array<const char*, kCategoryCount> kCategoryKeys = {"fun", "intensity", "nausea", "price"};

}  // namespace

void GeneratorConfig::validate() const {
  if (n_tracks < 1 || n_users < 1) throw Error(ErrorCode::InvalidConfig, "need at least one track and one user");
  if (n_ratings < n_tracks) {
    throw Error(ErrorCode::ConfigInfeasible, "n_ratings (" + std::to_string(n_ratings) + ") < n_tracks (" +
                                                 std::to_string(n_tracks) + ")");
  }
  if (!(susceptibility_spread >= 0.0) || !(noise_spread >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "noise spreads must be nonnegative");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt > 0");
  for (const auto& w : palette) {
    double sum = 0.0;
    for (double v : w) {
      if (!(v >= 0.0)) throw Error(ErrorCode::InvalidConfig, "segment weights must be nonnegative");
      sum += v;
    }
    if (!(sum > 0.0)) throw Error(ErrorCode::InvalidConfig, "segment weights must not all be zero");
  }
  physics.validate();
}

OracleCoefficients OracleCoefficients::defaults() {
  OracleCoefficients o;
  constexpr auto fun = static_cast<std::size_t>(Category::Fun);
  constexpr auto intensity = static_cast<std::size_t>(Category::Intensity);
  constexpr auto nausea = static_cast<std::size_t>(Category::Nausea);
  constexpr auto price = static_cast<std::size_t>(Category::Price);
  using namespace slot;

  o.intercept[fun] = 1.5;
  o.weights[fun][kMaxSpeed] = 0.06;
  o.weights[fun][kMaxUpAngle] = 0.01;
  o.weights[fun][kVertical + kFracNeg] = 1.5;
  o.weights[fun][kDuration] = 0.01;

  o.intercept[intensity] = 0.5;
  o.weights[intensity][kMaxSpeed] = 0.08;
  o.weights[intensity][kMaxDownAngle] = 0.02;
  o.weights[intensity][kVertical + kMaxPos] = 0.4;

  o.intercept[nausea] = 1.65;
  o.weights[nausea][kCoasterType] = 1.2;
  o.weights[nausea][kLateral + kAvgPos] = 0.2;
  o.weights[nausea][kLateral + kAvgNeg] = 0.2;
  o.weights[nausea][kVertical + kMaxNeg] = 1.0;
  o.weights[nausea][kVertical + kFracNeg] = 1.0;

  o.intercept[price] = 1.0;
  o.weights[price][kMaxSpeed] = 0.05;
  o.weights[price][kTotalLength] = 0.002;
  o.weights[price][kCoasterType] = 0.5;
  return o;
}

void OracleCoefficients::validate() const {
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    if (!std::isfinite(intercept[c])) throw Error(ErrorCode::InvalidConfig, "oracle intercept must be finite");
    for (double w : weights[c]) {
      if (!std::isfinite(w)) throw Error(ErrorCode::InvalidConfig, "oracle weights must be finite");
    }
  }
  const auto& nausea = weights[static_cast<std::size_t>(Category::Nausea)];
  for (std::size_t j = slot::kVertical; j < kCustomFeatureCount; ++j) {
    if (nausea[j] < 0.0) throw Error(ErrorCode::InvalidConfig, "nausea weights on g-force slots must be >= 0");
  }
}

nlohmann::ordered_json to_json(const OracleCoefficients& oracle) {
  nlohmann::ordered_json out;
  out["feature_order"] = [] {
    std::vector<std::string> names;
    for (auto n : custom_feature_names()) names.emplace_back(n);
    return names;
  }();
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    nlohmann::ordered_json entry;
    entry["intercept"] = oracle.intercept[c];
    entry["weights"] = std::vector<double>(oracle.weights[c].begin(), oracle.weights[c].end());
    out[kCategoryKeys[c]] = entry;
  }
  return out;
}

OracleCoefficients oracle_from_json(const json& doc) {
  try {
    OracleCoefficients o;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      const auto& entry = doc.at(kCategoryKeys[c]);
      o.intercept[c] = entry.at("intercept").get<double>();
      const auto w = entry.at("weights").get<std::vector<double>>();
      if (w.size() != kCustomFeatureCount) throw Error(ErrorCode::MalformedSyntax, "oracle needs 25 weights per category");
      std::copy(w.begin(), w.end(), o.weights[c].begin());
    }
    o.validate();
    return o;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedSyntax, e.what());
  }
}

Track generate_track(std::uint64_t seed, CoasterType type, const GeneratorConfig& cfg) {
  const int t = static_cast<int>(type);
  if (t < 0 || t > 2) throw Error(ErrorCode::InvalidConfig, "coaster type must be 0, 1 or 2");
  cfg.physics.validate();
  Rng rng(seed);
  std::string last_failure = "none";
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    try {
      const auto path = compose_path(rng, type, cfg);
      TrackGeometry geometry = retime(path, cfg.dt, cfg.physics);
      geometry.coaster_type = type;
      Track track = annotate(geometry, cfg.physics);
      if (type == CoasterType::Gentle && max_abs_pitch(track) > kGentlePitchLimit) {
        last_failure = "pitch limit";
        continue;
      }
      return track;
    } catch (const Error& e) {
      last_failure = e.what();
    }
  }
  throw Error(ErrorCode::GenerationFailed, "no valid track after 10 attempts: " + last_failure);
}

std::array<double, kCategoryCount> oracle_latents(const FeatureVector& features, const OracleCoefficients& oracle) {
  std::array<double, kCategoryCount> out{};
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    double v = oracle.intercept[c];
    for (std::size_t j = 0; j < kCustomFeatureCount; ++j) v += oracle.weights[c][j] * features[j];
    out[c] = std::clamp(v, 1.0, 5.0);
  }
  return out;
}

std::array<double, kCategoryCount> oracle_latents(const Track& track, const OracleCoefficients& oracle) {
  return oracle_latents(extract_custom(track), oracle);
}

Dataset simulate_ratings(std::span<const Track> tracks, const GeneratorConfig& cfg, const OracleCoefficients& oracle) {
  cfg.validate();
  oracle.validate();
  if (tracks.size() != static_cast<std::size_t>(cfg.n_tracks)) {
    throw Error(ErrorCode::ConfigInfeasible, "expected " + std::to_string(cfg.n_tracks) + " tracks");
  }
  Rng rng(mix_seed(cfg.seed ^ 0x5241544552ull));
  const auto n_users = static_cast<std::uint64_t>(cfg.n_users);

  std::vector<double> susceptibility(n_users);
  for (auto& s : susceptibility) s = rng.uniform(-cfg.susceptibility_spread, cfg.susceptibility_spread);

  std::vector<std::array<double, kCategoryCount>> latents;
  for (const auto& t : tracks) latents.push_back(oracle_latents(t, oracle));

  std::set<std::pair<std::size_t, std::uint64_t>> used;
  std::vector<std::pair<std::size_t, std::uint64_t>> pairs;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto user = rng.index(n_users);
    used.insert({i, user});
    pairs.emplace_back(i, user);
  }
  const std::size_t capacity = tracks.size() * n_users;
  while (pairs.size() < static_cast<std::size_t>(cfg.n_ratings)) {
    auto pick = std::make_pair(static_cast<std::size_t>(rng.index(tracks.size())), rng.index(n_users));
    // Repeat raters only once every pair is taken.
    if (used.size() < capacity && used.count(pick)) continue;
    used.insert(pick);
    pairs.push_back(pick);
  }

  Dataset ds;
  ds.tracks.assign(tracks.begin(), tracks.end());
  for (const auto& [track, user] : pairs) {
    RatingRecord r;
    r.track_id = tracks[track].id;
    char name[16];
    std::snprintf(name, sizeof name, "u%02llu", static_cast<unsigned long long>(user));
    r.user_id = name;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      const auto cat = static_cast<Category>(c);
      double value = latents[track][c] + rng.uniform(-cfg.noise_spread, cfg.noise_spread);
      if (cat == Category::Nausea || cat == Category::Intensity) value += susceptibility[user];
      r.stars[c] = std::clamp(round_half_up(value), kMinStars, kMaxStars);
    }
    ds.ratings.push_back(std::move(r));
  }
  std::stable_sort(ds.ratings.begin(), ds.ratings.end(), [](const RatingRecord& a, const RatingRecord& b) {
    return std::tie(a.track_id, a.user_id) < std::tie(b.track_id, b.user_id);
  });
  ds.validate();
  return ds;
}

Dataset generate_dataset(const GeneratorConfig& cfg, const OracleCoefficients& oracle) {
  cfg.validate();
  std::vector<Track> tracks;
  for (int i = 0; i < cfg.n_tracks; ++i) {
    const auto type = static_cast<CoasterType>(i % 3);
    Track t = generate_track(mix_seed(cfg.seed * 1000003ull + static_cast<std::uint64_t>(i)), type, cfg);
    char name[16];
    std::snprintf(name, sizeof name, "t%03d", i);
    t.id = name;
    tracks.push_back(std::move(t));
  }
  return simulate_ratings(tracks, cfg, oracle);
}

void write_synthetic_dataset(const Dataset& dataset, const OracleCoefficients& oracle, const std::string& dir) {
  save_dataset(dataset, dir);
  write_text_file((std::filesystem::path(dir) / "oracle-coefficients.json").string(), to_json(oracle).dump(2) + "\n");
}

}  // namespace rcvr
