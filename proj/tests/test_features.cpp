#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rcvr/error.hpp"
#include "rcvr/features.hpp"
#include "support.hpp"

using namespace rcvr;

namespace {

std::vector<Track> corpus(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<Track> out;
  for (int i = 0; i < n; ++i) out.push_back(test::random_track(rng, "c" + std::to_string(i)));
  return out;
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("flat straight ride by hand") {
    const Track t = test::flat_track(5.0, 100);
    const FeatureVector f = extract_custom(t);
    CHECK(f[slot::kMaxSpeed] == doctest::Approx(5.0));
    CHECK(f[slot::kAvgSpeed] == doctest::Approx(5.0));
    CHECK(f[slot::kTotalLength] == doctest::Approx(49.5));
    CHECK(f[slot::kMaxDownAngle] == 0.0);
    CHECK(f[slot::kMaxUpAngle] == 0.0);
    CHECK(f[slot::kCoasterType] == 0.0);
    CHECK(f[slot::kDuration] == doctest::Approx(9.9));

    CHECK(f[slot::kVertical + slot::kMaxPos] == doctest::Approx(1.0));
    CHECK(f[slot::kVertical + slot::kAvgPos] == doctest::Approx(1.0));
    CHECK(f[slot::kVertical + slot::kFracPos] == 1.0);
    CHECK(f[slot::kVertical + slot::kMaxNeg] == 0.0);
    CHECK(f[slot::kVertical + slot::kAvgNeg] == 0.0);
    CHECK(f[slot::kVertical + slot::kFracNeg] == 0.0);
    for (std::size_t j = slot::kLateral; j < kCustomFeatureCount; ++j) CHECK(f[j] == 0.0);
  }

  TEST_CASE("missing force sign gives empty conditional statistics") {
    Track t = test::flat_track(5.0, 10);
    for (auto& p : t.points) p.gforce.y = 0.3;
    const FeatureVector f = extract_custom(t);
    CHECK(f[slot::kLateral + slot::kAvgNeg] == 0.0);
    CHECK(f[slot::kLateral + slot::kFracNeg] == 0.0);
    CHECK(f[slot::kLateral + slot::kAvgPos] == doctest::Approx(0.3));
  }

  TEST_CASE("pitch angles") {
    std::vector<Vec3> path;
    for (int i = 0; i <= 200; ++i) path.push_back({0.1 * i, -0.1 * i, 0.0});
    const Track t = annotate(retime(path, 0.1, PhysicsConfig{}), PhysicsConfig{});
    const FeatureVector f = extract_custom(t);
    CHECK(f[slot::kMaxDownAngle] == doctest::Approx(45.0));
    CHECK(f[slot::kMaxUpAngle] == 0.0);
  }

  TEST_CASE("invariants over random rides") {
    for (const auto& t : corpus(17, 12)) {
      const FeatureVector f = extract_custom(t);
      CHECK(std::abs(f[slot::kTotalLength] - total_length(t)) <= 1e-9);
      CHECK(f[slot::kMaxSpeed] >= f[slot::kAvgSpeed]);
      for (std::size_t a : {slot::kMaxDownAngle, slot::kMaxUpAngle}) {
        CHECK(f[a] >= 0.0);
        CHECK(f[a] <= 90.0);
      }
      for (std::size_t base : {slot::kVertical, slot::kLateral, slot::kLongitudinal}) {
        const double fp = f[base + slot::kFracPos], fn = f[base + slot::kFracNeg];
        CHECK(fp >= 0.0);
        CHECK(fn >= 0.0);
        CHECK(fp + fn <= 1.0 + 1e-12);
        CHECK(f[base + slot::kMaxPos] >= f[base + slot::kAvgPos]);
        CHECK(f[base + slot::kAvgPos] >= 0.0);
        CHECK(f[base + slot::kMaxNeg] >= f[base + slot::kAvgNeg]);
        CHECK(f[base + slot::kAvgNeg] >= 0.0);
      }
    }
  }

  TEST_CASE("sequence rows") {
    Track two;
    two.points.resize(2);
    two.points[1].position = {0.3, 0.0, 0.0};
    CHECK(extract_sequence(two).size() == 1);

    for (const auto& t : corpus(23, 6)) {
      const auto rows = extract_sequence(t);
      const auto rel = relative_positions(t);
      REQUIRE(rows.size() == rel.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i][0] == rel[i].x);
        CHECK(rows[i][1] == rel[i].y);
        CHECK(rows[i][2] == rel[i].z);
        CHECK(rows[i][3] == t.points[i + 1].speed);
        for (double v : rows[i]) CHECK(std::isfinite(v));
      }
    }
  }

  TEST_CASE("feature CSV") {
    const auto tracks = corpus(29, 3);
    const std::string csv = features_csv(tracks);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(std::count(line.begin(), line.end(), ',') == static_cast<long>(kCustomFeatureCount));
    CHECK(line.rfind("track_id,max_speed,", 0) == 0);
    int rows = 0;
    while (std::getline(in, line)) {
      CHECK(std::count(line.begin(), line.end(), ',') == static_cast<long>(kCustomFeatureCount));
      CHECK(line.rfind(tracks[rows].id + ",", 0) == 0);
      ++rows;
    }
    CHECK(rows == 3);
  }

  TEST_CASE("normalizer midpoint and zero range") {
    const Normalizer n({0.0, 2.0}, {10.0, 2.0});
    CHECK(n.apply(0, 5.0) == 0.5);
    CHECK(n.apply(1, 2.0) == 0.5);
    CHECK(n.apply(1, 100.0) == 0.5);
    CHECK(Normalizer::identity(3).apply(2, 0.7) == 0.7);
  }

  TEST_CASE("fitted normalizer maps its own samples into the unit box") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<FeatureVector> samples(1 + rng.index(30));
      for (auto& s : samples) {
        for (auto& v : s) v = rng.uniform(-50.0, 50.0);
      }
      const Normalizer n = fit_normalizer(samples);
      for (const auto& s : samples) {
        for (double v : n.apply(s)) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
      }
    }
  }

  TEST_CASE("fitting on nothing is an error") {
    std::vector<FeatureVector> none;
    try {
      fit_normalizer(none);
      FAIL("fitted on no samples");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyFit);
    }
    NormalizerFitter fitter(2);
    const std::vector<double> wrong{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(fitter.add(wrong), Error);
  }
}
