#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rcvr/track.hpp"

namespace rcvr {

enum class Category : int { Fun = 0, Intensity = 1, Nausea = 2, Price = 3 };
inline constexpr std::size_t kCategoryCount = 4;
inline constexpr int kMinStars = 1;
inline constexpr int kMaxStars = 5;
inline constexpr std::size_t kStarLevels = 5;

/// Stars indexed by Category.
using StarTuple = std::array<int, kCategoryCount>;

std::string_view to_string(Category c);
const std::array<Category, kCategoryCount>& all_categories();

struct RatingRecord {
  std::string track_id;
  std::string user_id;
  StarTuple stars{};

  bool operator==(const RatingRecord&) const = default;
};

struct Dataset {
  std::vector<Track> tracks;
  std::vector<RatingRecord> ratings;

  /// Stars in range, ratings resolve to a track, every track is rated,
  /// track ids unique. Throws InvariantViolation.
  void validate() const;
  const Track& track(std::string_view id) const;
};

enum class AggregationMode { KeepAll, Average, MostPicked };

std::string_view to_string(AggregationMode mode);
/// Accepts "keep-all", "average", "most-picked".
AggregationMode parse_aggregation_mode(std::string_view text);

/// Collapses one track's ratings into training targets.
///
/// KeepAll returns every record's stars in input order. Average rounds the
/// per-category mean half-up. MostPicked takes the modal star; ties go to the
/// star closest to the mean, then to the lower star.
std::vector<StarTuple> aggregate(std::span<const RatingRecord> ratings, AggregationMode mode);

struct LabeledExample {
  std::string track_id;
  StarTuple target{};

  bool operator==(const LabeledExample&) const = default;
};

/// Ordered by (track_id, user_id).
std::vector<LabeledExample> assemble_examples(const Dataset& dataset, AggregationMode mode);

struct Fold {
  std::vector<std::string> track_ids;  // sorted
};

/// Partitions the distinct track ids into k folds whose sizes differ by at
/// most one. Deterministic in seed. Throws TooFewGroups.
std::vector<Fold> split_folds(std::span<const LabeledExample> examples, int k, std::uint64_t seed);

// ---- dataset files ----

struct DatasetManifest {
  std::vector<std::string> track_paths;  // relative to the manifest
  std::vector<RatingRecord> ratings;

  bool operator==(const DatasetManifest&) const = default;
};

DatasetManifest parse_manifest(std::string_view text);
std::string serialize_manifest(const DatasetManifest& manifest);

RatingRecord rating_from_json(const nlohmann::json& doc, std::size_t index = 0);
nlohmann::ordered_json to_json(const RatingRecord& record);

/// Reads manifest.json and every track it lists.
Dataset load_dataset(const std::string& manifest_path);
/// Writes <dir>/tracks/<id>.rcvr.json and <dir>/manifest.json.
void save_dataset(const Dataset& dataset, const std::string& dir);

std::string ratings_csv(std::span<const RatingRecord> ratings);

}  // namespace rcvr
