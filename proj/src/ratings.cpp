#include "rcvr/ratings.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>

#include "rcvr/error.hpp"
#include "rcvr/io.hpp"
#include "rcvr/random.hpp"

namespace rcvr {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::array<const char*, kCategoryCount> kCategoryKeys = {"fun", "intensity", "nausea", "price"};

bool valid_star(int s) { return s >= kMinStars && s <= kMaxStars; }

int round_half_up_mean(int sum, int n) { return (2 * sum + n) / (2 * n); }

int most_picked(std::span<const RatingRecord> ratings, std::size_t c) {
  std::array<int, kStarLevels + 1> counts{};
  int sum = 0;
  for (const auto& r : ratings) {
    ++counts[r.stars[c]];
    sum += r.stars[c];
  }
  const int n = static_cast<int>(ratings.size());
  const int top = *std::max_element(counts.begin() + 1, counts.end());
  int best = 0;
  int best_distance = 0;
  for (int star = kMinStars; star <= kMaxStars; ++star) {
    if (counts[star] != top) continue;
    // |star - mean| scaled by n keeps the comparison exact.
    const int distance = std::abs(star * n - sum);
    if (best == 0 || distance < best_distance) {
      best = star;
      best_distance = distance;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(Category c) { return kCategoryKeys[static_cast<std::size_t>(c)]; }

const std::array<Category, kCategoryCount>& all_categories() {
  static constexpr std::array<Category, kCategoryCount> kAll = {Category::Fun, Category::Intensity,
                                                                Category::Nausea, Category::Price};
  return kAll;
}

std::string_view to_string(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::KeepAll: return "keep-all";
    case AggregationMode::Average: return "average";
    case AggregationMode::MostPicked: return "most-picked";
  }
  return "?";
}

AggregationMode parse_aggregation_mode(std::string_view text) {
  if (text == "keep-all") return AggregationMode::KeepAll;
  if (text == "average") return AggregationMode::Average;
  if (text == "most-picked") return AggregationMode::MostPicked;
  throw Error(ErrorCode::InvalidConfig, "unknown aggregation mode \"" + std::string(text) + "\"");
}

void Dataset::validate() const {
  std::set<std::string_view> ids;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!ids.insert(tracks[i].id).second) {
      throw Error(ErrorCode::InvariantViolation, "duplicate track id " + tracks[i].id, i);
    }
  }
  std::set<std::string_view> rated;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const auto& r = ratings[i];
    if (!ids.count(r.track_id)) {
      throw Error(ErrorCode::InvariantViolation, "rating refers to unknown track " + r.track_id, i);
    }
    for (int s : r.stars) {
      if (!valid_star(s)) throw Error(ErrorCode::InvariantViolation, "stars in 1..5", i);
    }
    rated.insert(r.track_id);
  }
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!rated.count(tracks[i].id)) {
      throw Error(ErrorCode::InvariantViolation, "track " + tracks[i].id + " has no ratings", i);
    }
  }
}

const Track& Dataset::track(std::string_view id) const {
  for (const auto& t : tracks) {
    if (t.id == id) return t;
  }
  throw Error(ErrorCode::InvariantViolation, "unknown track " + std::string(id));
}

std::vector<StarTuple> aggregate(std::span<const RatingRecord> ratings, AggregationMode mode) {
  if (ratings.empty()) throw Error(ErrorCode::EmptyInput, "no ratings to aggregate");
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    if (ratings[i].track_id != ratings.front().track_id) {
      throw Error(ErrorCode::InvariantViolation, "ratings span several tracks", i);
    }
    for (int s : ratings[i].stars) {
      if (!valid_star(s)) throw Error(ErrorCode::InvariantViolation, "stars in 1..5", i);
    }
  }

  std::vector<StarTuple> out;
  switch (mode) {
    case AggregationMode::KeepAll:
      for (const auto& r : ratings) out.push_back(r.stars);
      break;
    case AggregationMode::Average: {
      StarTuple t{};
      for (std::size_t c = 0; c < kCategoryCount; ++c) {
        int sum = 0;
        for (const auto& r : ratings) sum += r.stars[c];
        t[c] = round_half_up_mean(sum, static_cast<int>(ratings.size()));
      }
      out.push_back(t);
      break;
    }
    case AggregationMode::MostPicked: {
      StarTuple t{};
      for (std::size_t c = 0; c < kCategoryCount; ++c) t[c] = most_picked(ratings, c);
      out.push_back(t);
      break;
    }
  }
  return out;
}

std::vector<LabeledExample> assemble_examples(const Dataset& dataset, AggregationMode mode) {
  dataset.validate();
  std::map<std::string, std::vector<RatingRecord>> by_track;
  for (const auto& r : dataset.ratings) by_track[r.track_id].push_back(r);

  std::vector<LabeledExample> out;
  for (auto& [track_id, records] : by_track) {
    std::stable_sort(records.begin(), records.end(),
                     [](const RatingRecord& a, const RatingRecord& b) { return a.user_id < b.user_id; });
    for (const auto& stars : aggregate(records, mode)) out.push_back({track_id, stars});
  }
  return out;
}

std::vector<Fold> split_folds(std::span<const LabeledExample> examples, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::TooFewGroups, "need at least 2 folds");
  std::set<std::string> distinct;
  for (const auto& e : examples) distinct.insert(e.track_id);
  if (distinct.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::TooFewGroups,
                std::to_string(distinct.size()) + " tracks cannot fill " + std::to_string(k) + " folds");
  }
  std::vector<std::string> ids(distinct.begin(), distinct.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(ids));

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ids.size(); ++i) folds[i % folds.size()].track_ids.push_back(ids[i]);
  for (auto& f : folds) std::sort(f.track_ids.begin(), f.track_ids.end());
  return folds;
}

RatingRecord rating_from_json(const json& doc, std::size_t index) {
  if (!doc.is_object()) throw Error(ErrorCode::MalformedSyntax, "rating must be an object", index);
  RatingRecord r;
  std::size_t seen = 0;
  for (const auto& [key, value] : doc.items()) {
    if (key == "track_id" || key == "user_id") {
      if (!value.is_string()) throw Error(ErrorCode::MalformedSyntax, key + " must be a string", index);
      (key == "track_id" ? r.track_id : r.user_id) = value.get<std::string>();
      ++seen;
      continue;
    }
    const auto it = std::find(kCategoryKeys.begin(), kCategoryKeys.end(), key);
    if (it == kCategoryKeys.end()) throw Error(ErrorCode::MalformedSyntax, "unknown rating key \"" + key + "\"", index);
    if (!value.is_number_integer()) throw Error(ErrorCode::MalformedSyntax, key + " must be an integer", index);
    r.stars[static_cast<std::size_t>(it - kCategoryKeys.begin())] = value.get<int>();
    ++seen;
  }
  if (seen != 2 + kCategoryCount) throw Error(ErrorCode::MalformedSyntax, "rating is missing fields", index);
  for (int s : r.stars) {
    if (!valid_star(s)) throw Error(ErrorCode::InvariantViolation, "stars in 1..5", index);
  }
  return r;
}

ordered_json to_json(const RatingRecord& record) {
  ordered_json out;
  out["track_id"] = record.track_id;
  out["user_id"] = record.user_id;
  for (std::size_t c = 0; c < kCategoryCount; ++c) out[kCategoryKeys[c]] = record.stars[c];
  return out;
}

DatasetManifest parse_manifest(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedSyntax, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::MalformedSyntax, "manifest must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "tracks" && key != "ratings") throw Error(ErrorCode::MalformedSyntax, "unknown manifest key \"" + key + "\"");
  }
  if (!doc.contains("tracks") || !doc["tracks"].is_array()) throw Error(ErrorCode::MalformedSyntax, "manifest needs a tracks array");
  if (!doc.contains("ratings") || !doc["ratings"].is_array()) throw Error(ErrorCode::MalformedSyntax, "manifest needs a ratings array");

  DatasetManifest m;
  for (std::size_t i = 0; i < doc["tracks"].size(); ++i) {
    const auto& p = doc["tracks"][i];
    if (!p.is_string()) throw Error(ErrorCode::MalformedSyntax, "track path must be a string", i);
    m.track_paths.push_back(p.get<std::string>());
  }
  for (std::size_t i = 0; i < doc["ratings"].size(); ++i) m.ratings.push_back(rating_from_json(doc["ratings"][i], i));
  return m;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  // Hand-assembled so key order is fixed regardless of the json map type.
  std::string out = "{\n  \"tracks\": [";
  for (std::size_t i = 0; i < manifest.track_paths.size(); ++i) {
    out += i ? ",\n    " : "\n    ";
    out += json(manifest.track_paths[i]).dump();
  }
  out += manifest.track_paths.empty() ? "],\n" : "\n  ],\n";
  out += "  \"ratings\": [";
  for (std::size_t i = 0; i < manifest.ratings.size(); ++i) {
    const auto& r = manifest.ratings[i];
    out += i ? ",\n    " : "\n    ";
    out += "{\"track_id\": " + json(r.track_id).dump() + ", \"user_id\": " + json(r.user_id).dump();
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      out += ", \"";
      out += kCategoryKeys[c];
      out += "\": " + std::to_string(r.stars[c]);
    }
    out += '}';
  }
  out += manifest.ratings.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

Dataset load_dataset(const std::string& manifest_path) {
  const auto manifest = parse_manifest(read_text_file(manifest_path));
  const auto root = std::filesystem::path(manifest_path).parent_path();
  Dataset ds;
  for (const auto& rel : manifest.track_paths) ds.tracks.push_back(load_track((root / rel).string()));
  ds.ratings = manifest.ratings;
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
  dataset.validate();
  const auto root = std::filesystem::path(dir);
  std::filesystem::create_directories(root / "tracks");
  DatasetManifest manifest;
  for (const auto& t : dataset.tracks) {
    const std::string rel = "tracks/" + t.id + ".rcvr.json";
    save_track(t, (root / rel).string());
    manifest.track_paths.push_back(rel);
  }
  manifest.ratings = dataset.ratings;
  write_text_file((root / "manifest.json").string(), serialize_manifest(manifest));
}

std::string ratings_csv(std::span<const RatingRecord> ratings) {
  std::string out = "track_id,user_id,fun,intensity,nausea,price\n";
  for (const auto& r : ratings) {
    out += r.track_id + ',' + r.user_id;
    for (int s : r.stars) out += ',' + std::to_string(s);
    out += '\n';
  }
  return out;
}

}  // namespace rcvr
