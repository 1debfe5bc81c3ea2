#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "rcvr/error.hpp"
#include "rcvr/ratings.hpp"
#include "support.hpp"

using namespace rcvr;

namespace {

std::vector<RatingRecord> votes(std::initializer_list<int> nausea) {
  std::vector<RatingRecord> out;
  int user = 0;
  for (int s : nausea) out.push_back({"t", "u" + std::to_string(user++), {3, 3, s, 3}});
  return out;
}

int nausea_of(std::span<const RatingRecord> rs, AggregationMode mode) {
  return aggregate(rs, mode).front()[static_cast<std::size_t>(Category::Nausea)];
}

// Straightforward restatement of the aggregation rules on doubles.
int oracle_average(const std::vector<int>& v) {
  double mean = 0.0;
  for (int s : v) mean += s;
  mean /= static_cast<double>(v.size());
  return static_cast<int>(std::floor(mean + 0.5));
}

int oracle_most_picked(const std::vector<int>& v) {
  std::map<int, int> count;
  double mean = 0.0;
  for (int s : v) {
    ++count[s];
    mean += s;
  }
  mean /= static_cast<double>(v.size());
  int best = -1;
  for (const auto& [star, n] : count) {
    if (best < 0) {
      best = star;
      continue;
    }
    if (n > count[best]) {
      best = star;
    } else if (n == count[best] && std::abs(star - mean) < std::abs(best - mean) - 1e-12) {
      best = star;
    }
  }
  return best;
}

Dataset tiny_dataset(int n_tracks, int ratings_per_track) {
  Dataset ds;
  for (int i = 0; i < n_tracks; ++i) {
    Track t = test::flat_track(3.0, 5);
    t.id = "t" + std::to_string(100 + i);
    ds.tracks.push_back(t);
    for (int u = 0; u < ratings_per_track; ++u) {
      ds.ratings.push_back({t.id, "u" + std::to_string(u), {1 + (i + u) % 5, 1 + i % 5, 1 + u % 5, 2}});
    }
  }
  return ds;
}

}  // namespace

TEST_SUITE("ratings") {
  TEST_CASE("four fives and two ones collapse to five") {
    CHECK(nausea_of(votes({5, 5, 5, 5, 1, 1}), AggregationMode::MostPicked) == 5);
  }

  TEST_CASE("equidistant modes tie to the lower star") {
    CHECK(nausea_of(votes({2, 2, 4, 4}), AggregationMode::MostPicked) == 2);
  }

  TEST_CASE("modal tie goes to the star nearer the mean") {
    // Mean 3: 4 is nearer than 1.
    CHECK(nausea_of(votes({1, 1, 4, 4, 5}), AggregationMode::MostPicked) == 4);
  }

  TEST_CASE("average rounds half up") {
    CHECK(nausea_of(votes({2, 3}), AggregationMode::Average) == 3);
    CHECK(nausea_of(votes({1, 2, 2}), AggregationMode::Average) == 2);
    CHECK(nausea_of(votes({4, 5, 5, 5}), AggregationMode::Average) == 5);
  }

  TEST_CASE("a single rating passes through every mode") {
    const std::vector<RatingRecord> one{{"t", "u", {2, 5, 1, 4}}};
    for (auto mode : {AggregationMode::KeepAll, AggregationMode::Average, AggregationMode::MostPicked}) {
      const auto out = aggregate(one, mode);
      REQUIRE(out.size() == 1);
      CHECK(out.front() == one.front().stars);
    }
  }

  TEST_CASE("keep-all preserves order") {
    const auto in = votes({4, 1, 3});
    const auto out = aggregate(in, AggregationMode::KeepAll);
    REQUIRE(out.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == in[i].stars);
  }

  TEST_CASE("aggregation errors") {
    CHECK_THROWS_AS(aggregate({}, AggregationMode::Average), Error);
    auto bad = votes({3, 6});
    CHECK_THROWS_AS(aggregate(bad, AggregationMode::Average), Error);
    auto mixed = votes({3, 3});
    mixed[1].track_id = "other";
    CHECK_THROWS_AS(aggregate(mixed, AggregationMode::Average), Error);
  }

  TEST_CASE("random vote sets against a brute-force oracle") {
    Rng rng(1000);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 1 + rng.index(12);
      std::vector<int> stars(n);
      for (auto& s : stars) s = 1 + static_cast<int>(rng.index(5));
      std::vector<RatingRecord> records;
      for (std::size_t i = 0; i < n; ++i) records.push_back({"t", "u" + std::to_string(i), {stars[i], 1, stars[i], 5}});

      const int avg = nausea_of(records, AggregationMode::Average);
      const int mode = nausea_of(records, AggregationMode::MostPicked);
      CHECK(avg == oracle_average(stars));
      CHECK(mode == oracle_most_picked(stars));

      // Identity: a unanimous set aggregates to the shared vote.
      std::vector<RatingRecord> same(n, RatingRecord{"t", "u", {stars[0], stars[0], stars[0], stars[0]}});
      CHECK(aggregate(same, AggregationMode::Average).front() == same.front().stars);
      CHECK(aggregate(same, AggregationMode::MostPicked).front() == same.front().stars);

      // Order of the votes never matters.
      rng.shuffle(std::span<RatingRecord>(records));
      CHECK(nausea_of(records, AggregationMode::Average) == avg);
      CHECK(nausea_of(records, AggregationMode::MostPicked) == mode);
    }
  }

  TEST_CASE("mode names") {
    for (auto mode : {AggregationMode::KeepAll, AggregationMode::Average, AggregationMode::MostPicked}) {
      CHECK(parse_aggregation_mode(to_string(mode)) == mode);
    }
    CHECK_THROWS_AS(parse_aggregation_mode("median"), Error);
  }

  TEST_CASE("example counts per mode") {
    Dataset ds = tiny_dataset(33, 3);
    ds.ratings.resize(99);
    ds.ratings.push_back({"t100", "u9", {1, 1, 1, 1}});
    CHECK(assemble_examples(ds, AggregationMode::KeepAll).size() == 100);
    CHECK(assemble_examples(ds, AggregationMode::Average).size() == 33);
    CHECK(assemble_examples(ds, AggregationMode::MostPicked).size() == 33);
  }

  TEST_CASE("consensus makes average and most-picked agree") {
    Dataset ds = tiny_dataset(6, 4);
    for (auto& r : ds.ratings) r.stars = {1 + static_cast<int>(r.track_id.back() - '0') % 5, 2, 3, 4};
    CHECK(assemble_examples(ds, AggregationMode::Average) == assemble_examples(ds, AggregationMode::MostPicked));
  }

  TEST_CASE("examples are ordered by track then user") {
    Dataset ds = tiny_dataset(4, 3);
    std::reverse(ds.ratings.begin(), ds.ratings.end());
    const auto ex = assemble_examples(ds, AggregationMode::KeepAll);
    for (std::size_t i = 1; i < ex.size(); ++i) CHECK(ex[i - 1].track_id <= ex[i].track_id);
    CHECK(ex.front().target == RatingRecord{"t100", "u0", {1, 1, 1, 2}}.stars);
  }

  TEST_CASE("dataset validation") {
    Dataset ds = tiny_dataset(3, 2);
    CHECK_NOTHROW(ds.validate());
    Dataset orphan = ds;
    orphan.ratings.push_back({"nope", "u", {1, 1, 1, 1}});
    CHECK_THROWS_AS(orphan.validate(), Error);
    Dataset unrated = ds;
    unrated.tracks.push_back(test::flat_track(3.0, 5));
    CHECK_THROWS_AS(unrated.validate(), Error);
    Dataset dup = ds;
    dup.tracks[1].id = dup.tracks[0].id;
    CHECK_THROWS_AS(dup.validate(), Error);
  }

  TEST_CASE("folds partition 33 tracks into 7,7,7,6,6") {
    const Dataset ds = tiny_dataset(33, 1);
    const auto ex = assemble_examples(ds, AggregationMode::Average);
    const auto folds = split_folds(ex, 5, 42);
    std::multiset<std::size_t> sizes;
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& f : folds) {
      sizes.insert(f.track_ids.size());
      for (const auto& id : f.track_ids) seen.insert(id);
      total += f.track_ids.size();
      CHECK(std::is_sorted(f.track_ids.begin(), f.track_ids.end()));
    }
    CHECK(sizes == std::multiset<std::size_t>{6, 6, 7, 7, 7});
    CHECK(total == 33);
    CHECK(seen.size() == 33);

    const auto again = split_folds(ex, 5, 42);
    for (std::size_t i = 0; i < folds.size(); ++i) CHECK(folds[i].track_ids == again[i].track_ids);
    bool differs = false;
    const auto other = split_folds(ex, 5, 43);
    for (std::size_t i = 0; i < folds.size(); ++i) differs |= folds[i].track_ids != other[i].track_ids;
    CHECK(differs);
  }

  TEST_CASE("folds group every rating of a track together") {
    const Dataset ds = tiny_dataset(10, 4);
    const auto ex = assemble_examples(ds, AggregationMode::KeepAll);
    const auto folds = split_folds(ex, 3, 7);
    std::set<std::string> seen;
    for (const auto& f : folds) {
      for (const auto& id : f.track_ids) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == 10);
  }

  TEST_CASE("too few tracks for the folds") {
    const auto ex = assemble_examples(tiny_dataset(3, 2), AggregationMode::Average);
    try {
      split_folds(ex, 5, 1);
      FAIL("split 3 tracks into 5 folds");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewGroups);
    }
  }

  TEST_CASE("manifest round trip and strictness") {
    DatasetManifest m;
    m.track_paths = {"tracks/a.rcvr.json", "tracks/b.rcvr.json"};
    m.ratings = {{"a", "u1", {1, 2, 3, 4}}, {"b", "u\"2", {5, 4, 3, 2}}};
    const std::string text = serialize_manifest(m);
    CHECK(parse_manifest(text) == m);
    CHECK(serialize_manifest(parse_manifest(text)) == text);

    CHECK_THROWS_AS(parse_manifest("{\"tracks\":[],\"ratings\":[],\"extra\":1}"), Error);
    CHECK_THROWS_AS(parse_manifest("{\"tracks\":[]}"), Error);
    try {
      parse_manifest(R"({"tracks":[],"ratings":[{"track_id":"a","user_id":"u","fun":1,"intensity":1,"nausea":9,"price":1}]})");
      FAIL("accepted 9 stars");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvariantViolation);
      CHECK(*e.index() == 0);
    }
  }

  TEST_CASE("dataset directory round trip") {
    const Dataset ds = tiny_dataset(4, 2);
    const auto dir = test::temp_dir("dataset-io");
    save_dataset(ds, dir);
    const Dataset back = load_dataset(dir + "/manifest.json");
    CHECK(back.tracks == ds.tracks);
    CHECK(back.ratings == ds.ratings);
  }

  TEST_CASE("ratings CSV") {
    const std::vector<RatingRecord> rs{{"a", "u", {1, 2, 3, 4}}};
    CHECK(ratings_csv(rs) == "track_id,user_id,fun,intensity,nausea,price\na,u,1,2,3,4\n");
  }
}
