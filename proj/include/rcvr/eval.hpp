#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcvr/net.hpp"
#include "rcvr/ratings.hpp"

namespace rcvr {

/// A named network configuration. The three comparison presets:
///   custom   - 25 custom features, 5 hidden layers of 40
///   sequence - per-point 7-vectors, 5 hidden layers of 50
///   combined - both inputs, 5 hidden layers of 100 (the default)
struct Preset {
  std::string name;
  NetworkConfig config;
};

const std::vector<Preset>& comparison_presets();
/// Throws InvalidConfig for unknown names.
Preset find_preset(std::string_view name);
inline constexpr std::string_view kDefaultPreset = "combined";

struct CategoryMetrics {
  double percent_correct = 0.0;
  double mean_error = 0.0;  // stars, in [0, 4]
};

using CategoryScores = std::array<CategoryMetrics, kCategoryCount>;

/// Exact-match percentage and mean absolute star error per category.
CategoryScores score_predictions(std::span<const LabeledExample> truth, std::span<const StarTuple> predicted);

struct CellResult {
  std::string preset;
  AggregationMode mode = AggregationMode::Average;
  int fold = 0;
  bool ok = false;
  std::string error;
  CategoryScores scores{};
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  std::uint64_t train_hash = 0;  // hash of the sorted training track ids
  std::uint64_t test_hash = 0;
  bool leakage_free = false;     // no track id shared between train and test
  std::vector<double> train_loss;
  std::vector<double> validation_mae;
};

struct SummaryRow {
  std::string preset;
  AggregationMode mode = AggregationMode::Average;
  int folds_ok = 0;
  CategoryScores mean{};
  CategoryScores stddev{};  // population standard deviation across folds
};

struct EvalReport {
  std::uint64_t seed = 0;
  int folds = 0;
  std::string dataset_hash;
  std::vector<CellResult> cells;
  std::vector<SummaryRow> summary;

  const SummaryRow* find(std::string_view preset, AggregationMode mode) const;
};

/// FNV-1a over the canonical serialization of every track and rating.
std::string dataset_fingerprint(const Dataset& dataset);

using CellObserver = std::function<void(const CellResult&)>;

/// Grouped k-fold cross-validation of every (preset, mode) pair. Normalizers
/// are fitted on training folds only. A failing cell is recorded and the
/// sweep continues.
EvalReport run_protocol(const Dataset& dataset, std::span<const Preset> presets, std::span<const AggregationMode> modes,
                        int k, std::uint64_t seed, const CellObserver& observer = {});

struct RenderedReport {
  std::string table;  // report.txt
  std::string csv;    // report.csv
  std::vector<std::pair<std::string, std::string>> curves;  // file name, contents
};

RenderedReport render_report(const EvalReport& report);
/// Writes report.txt, report.csv and curves/*.csv under dir.
void write_report(const EvalReport& report, const std::string& dir);

/// One parsed report.csv data row.
struct ReportCsvRow {
  std::string preset;
  std::string mode;
  std::string fold;  // fold index, "mean" or "std"
  std::string status;
  std::string category;
  double percent_correct = 0.0;
  double mean_error = 0.0;
};

std::vector<ReportCsvRow> parse_report_csv(std::string_view csv);

}  // namespace rcvr
