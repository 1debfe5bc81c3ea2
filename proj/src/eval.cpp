#include "rcvr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "rcvr/error.hpp"
#include "rcvr/io.hpp"

namespace rcvr {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

void fnv(std::uint64_t& h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
}

std::uint64_t hash_ids(const std::vector<std::string>& ids) {
  std::uint64_t h = kFnvOffset;
  for (const auto& id : ids) {
    fnv(h, id);
    fnv(h, std::string_view("\n"));
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Preset make_preset(std::string name, InputMode mode, int hidden_size) {
  NetworkConfig c;
  c.input_mode = mode;
  c.hidden_layers = 5;
  c.hidden_size = hidden_size;
  return {std::move(name), c};
}

CellResult run_cell(const Preset& preset, AggregationMode mode, int fold_index, const std::vector<Fold>& folds,
                    const std::vector<LabeledExample>& examples,
                    const std::map<std::string, std::shared_ptr<const ModelInput>>& inputs) {
  CellResult cell;
  cell.preset = preset.name;
  cell.mode = mode;
  cell.fold = fold_index;

  const auto& held_out = folds[static_cast<std::size_t>(fold_index)].track_ids;
  const std::set<std::string> test_ids(held_out.begin(), held_out.end());
  std::set<std::string> train_ids;
  std::vector<TrainingExample> train_set, test_set;
  std::vector<LabeledExample> test_truth;
  for (const auto& ex : examples) {
    TrainingExample te{inputs.at(ex.track_id), ex.target};
    if (test_ids.count(ex.track_id)) {
      test_set.push_back(te);
      test_truth.push_back(ex);
    } else {
      train_set.push_back(te);
      train_ids.insert(ex.track_id);
    }
  }
  cell.train_examples = train_set.size();
  cell.test_examples = test_set.size();
  cell.train_hash = hash_ids({train_ids.begin(), train_ids.end()});
  cell.test_hash = hash_ids(held_out);
  cell.leakage_free = std::none_of(train_ids.begin(), train_ids.end(),
                                   [&](const std::string& id) { return test_ids.count(id) > 0; });

  try {
    NetworkConfig cfg = preset.config;
    cfg.seed = preset.config.seed + static_cast<std::uint64_t>(fold_index);
    NetworkModel model = init_model(cfg);
    fit_normalizers(model, train_set);
    TrainResult result = train(model, train_set, test_set);
    std::vector<StarTuple> predicted;
    predicted.reserve(test_set.size());
    for (const auto& te : test_set) predicted.push_back(predict_stars(model, *te.input));
    cell.scores = score_predictions(test_truth, predicted);
    cell.train_loss = std::move(result.loss);
    cell.validation_mae = std::move(result.validation_mae);
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

SummaryRow summarize(const std::string& preset, AggregationMode mode, const std::vector<CellResult>& cells) {
  SummaryRow row;
  row.preset = preset;
  row.mode = mode;
  std::vector<const CellResult*> ok;
  for (const auto& c : cells) {
    if (c.preset == preset && c.mode == mode && c.ok) ok.push_back(&c);
  }
  row.folds_ok = static_cast<int>(ok.size());
  if (ok.empty()) return row;
  const double n = static_cast<double>(ok.size());
  for (std::size_t cat = 0; cat < kCategoryCount; ++cat) {
    double pc = 0.0, me = 0.0;
    for (const auto* c : ok) {
      pc += c->scores[cat].percent_correct;
      me += c->scores[cat].mean_error;
    }
    pc /= n;
    me /= n;
    double vpc = 0.0, vme = 0.0;
    for (const auto* c : ok) {
      vpc += std::pow(c->scores[cat].percent_correct - pc, 2);
      vme += std::pow(c->scores[cat].mean_error - me, 2);
    }
    row.mean[cat] = {pc, me};
    row.stddev[cat] = {std::sqrt(vpc / n), std::sqrt(vme / n)};
  }
  return row;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

const std::vector<Preset>& comparison_presets() {
  static const std::vector<Preset> kPresets = {
      make_preset("custom", InputMode::CustomOnly, 40),
      make_preset("sequence", InputMode::SequenceOnly, 50),
      make_preset("combined", InputMode::Combined, 100),
  };
  return kPresets;
}

Preset find_preset(std::string_view name) {
  for (const auto& p : comparison_presets()) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown preset \"" + std::string(name) + "\"");
}

CategoryScores score_predictions(std::span<const LabeledExample> truth, std::span<const StarTuple> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCode::InvariantViolation, "one prediction per example");
  CategoryScores out{};
  if (truth.empty()) return out;
  const double n = static_cast<double>(truth.size());
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    double hits = 0.0, err = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const int diff = std::abs(truth[i].target[c] - predicted[i][c]);
      if (diff == 0) hits += 1.0;
      err += diff;
    }
    out[c] = {100.0 * hits / n, err / n};
  }
  return out;
}

const SummaryRow* EvalReport::find(std::string_view preset, AggregationMode mode) const {
  for (const auto& row : summary) {
    if (row.preset == preset && row.mode == mode) return &row;
  }
  return nullptr;
}

std::string dataset_fingerprint(const Dataset& dataset) {
  std::uint64_t h = kFnvOffset;
  for (const auto& t : dataset.tracks) fnv(h, serialize_track(t));
  fnv(h, ratings_csv(dataset.ratings));
  return hex(h);
}

EvalReport run_protocol(const Dataset& dataset, std::span<const Preset> presets, std::span<const AggregationMode> modes,
                        int k, std::uint64_t seed, const CellObserver& observer) {
  dataset.validate();
  EvalReport report;
  report.seed = seed;
  report.folds = k;
  report.dataset_hash = dataset_fingerprint(dataset);

  std::map<std::string, std::shared_ptr<const ModelInput>> inputs;
  for (const auto& t : dataset.tracks) inputs.emplace(t.id, std::make_shared<const ModelInput>(make_input(t)));

  for (const auto mode : modes) {
    const auto examples = assemble_examples(dataset, mode);
    const auto folds = split_folds(examples, k, seed);
    for (const auto& preset : presets) {
      for (int f = 0; f < k; ++f) {
        report.cells.push_back(run_cell(preset, mode, f, folds, examples, inputs));
        if (observer) observer(report.cells.back());
      }
      report.summary.push_back(summarize(preset.name, mode, report.cells));
    }
  }
  return report;
}

RenderedReport render_report(const EvalReport& report) {
  RenderedReport out;
  constexpr auto nausea = static_cast<std::size_t>(Category::Nausea);

  std::ostringstream table;
  table << "Nausea prediction, " << report.folds << "-fold grouped cross-validation (seed " << report.seed
        << ", dataset " << report.dataset_hash << ")\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-12s %5s  %-16s %-16s\n", "preset", "aggregation", "folds", "% correct",
                "mean error");
  table << line;
  for (const auto& row : report.summary) {
    std::snprintf(line, sizeof line, "%-10s %-12s %5d  %6.1f%% +- %5.1f  %5.3f +- %5.3f\n", row.preset.c_str(),
                  std::string(to_string(row.mode)).c_str(), row.folds_ok, row.mean[nausea].percent_correct,
                  row.stddev[nausea].percent_correct, row.mean[nausea].mean_error, row.stddev[nausea].mean_error);
    table << line;
  }
  table << "\nAll categories (mean over folds: % correct | mean error)\n\n";
  std::snprintf(line, sizeof line, "%-10s %-12s %-15s %-15s %-15s %-15s\n", "preset", "aggregation", "fun", "intensity",
                "nausea", "price");
  table << line;
  for (const auto& row : report.summary) {
    std::string cols;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      char cell[32];
      std::snprintf(cell, sizeof cell, "%5.1f%% | %5.3f  ", row.mean[c].percent_correct, row.mean[c].mean_error);
      cols += cell;
    }
    std::snprintf(line, sizeof line, "%-10s %-12s %s\n", row.preset.c_str(), std::string(to_string(row.mode)).c_str(),
                  cols.c_str());
    table << line;
  }
  bool failures = false;
  for (const auto& cell : report.cells) {
    if (cell.ok) continue;
    if (!failures) table << "\nFailed cells\n";
    failures = true;
    table << "  " << cell.preset << ' ' << to_string(cell.mode) << " fold " << cell.fold << ": " << cell.error << '\n';
  }
  out.table = table.str();

  std::string csv =
      "preset,mode,fold,status,category,percent_correct,mean_error,train_examples,test_examples,train_hash,test_hash\n";
  for (const auto& cell : report.cells) {
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      csv += cell.preset + ',' + std::string(to_string(cell.mode)) + ',' + std::to_string(cell.fold) + ',' +
             (cell.ok ? "ok" : "failed") + ',' + std::string(to_string(static_cast<Category>(c))) + ',' +
             fixed(cell.scores[c].percent_correct) + ',' + fixed(cell.scores[c].mean_error) + ',' +
             std::to_string(cell.train_examples) + ',' + std::to_string(cell.test_examples) + ',' +
             hex(cell.train_hash) + ',' + hex(cell.test_hash) + '\n';
    }
  }
  for (const auto& row : report.summary) {
    for (const auto& [label, scores] : {std::pair{"mean", &row.mean}, std::pair{"std", &row.stddev}}) {
      for (std::size_t c = 0; c < kCategoryCount; ++c) {
        csv += row.preset + ',' + std::string(to_string(row.mode)) + ',' + label + ',' +
               (row.folds_ok > 0 ? "ok" : "failed") + ',' + std::string(to_string(static_cast<Category>(c))) + ',' +
               fixed((*scores)[c].percent_correct) + ',' + fixed((*scores)[c].mean_error) + ",,,,\n";
      }
    }
  }
  out.csv = std::move(csv);

  for (const auto& cell : report.cells) {
    std::string curve = "iteration,train_loss,validation_nausea_mae\n";
    for (std::size_t i = 0; i < cell.train_loss.size(); ++i) {
      curve += std::to_string(i + 1) + ',' + format_number(cell.train_loss[i]) + ',' +
               (i < cell.validation_mae.size() ? format_number(cell.validation_mae[i]) : std::string()) + '\n';
    }
    out.curves.emplace_back(cell.preset + "_" + std::string(to_string(cell.mode)) + "_fold" + std::to_string(cell.fold) +
                                ".csv",
                            std::move(curve));
  }
  return out;
}

void write_report(const EvalReport& report, const std::string& dir) {
  const auto root = std::filesystem::path(dir);
  std::filesystem::create_directories(root / "curves");
  const auto rendered = render_report(report);
  write_text_file((root / "report.txt").string(), rendered.table);
  write_text_file((root / "report.csv").string(), rendered.csv);
  for (const auto& [name, contents] : rendered.curves) write_text_file((root / "curves" / name).string(), contents);
}

std::vector<ReportCsvRow> parse_report_csv(std::string_view csv) {
  std::vector<ReportCsvRow> rows;
  std::size_t start = 0;
  bool header = true;
  while (start < csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    const auto line = csv.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 11) throw Error(ErrorCode::MalformedSyntax, "report row has " + std::to_string(f.size()) + " fields");
    ReportCsvRow row;
    row.preset = f[0];
    row.mode = f[1];
    row.fold = f[2];
    row.status = f[3];
    row.category = f[4];
    row.percent_correct = std::stod(f[5]);
    row.mean_error = std::stod(f[6]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rcvr
