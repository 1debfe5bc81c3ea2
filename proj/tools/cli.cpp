#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "app.hpp"
#include "rcvr/eval.hpp"
#include "rcvr/features.hpp"
#include "rcvr/io.hpp"
#include "rcvr/synth.hpp"
#include "service.hpp"

namespace rcvr::app {

namespace {

std::string model_path_or_env(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kModelEnv); env && *env) return env;
  throw Error(ErrorCode::MissingInput, "no model given (use --model or set RCVR_MODEL)");
}

PhysicsConfig physics_from_flag(const std::string& path) { return path.empty() ? PhysicsConfig{} : load_physics_config(path); }

nlohmann::json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedSyntax, path + ": invalid JSON: " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct SynthArgs {
  std::string out;
  std::uint64_t seed = GeneratorConfig{}.seed;
  int tracks = GeneratorConfig{}.n_tracks;
  int users = GeneratorConfig{}.n_users;
  int ratings = GeneratorConfig{}.n_ratings;
  double susceptibility = GeneratorConfig{}.susceptibility_spread;
  double noise = GeneratorConfig{}.noise_spread;
  std::string oracle;
  std::string config;
};

struct TrainArgs {
  std::string dataset;
  std::string out;
  std::string preset = std::string(kDefaultPreset);
  std::string mode = "average";
  int iterations = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = NetworkConfig{}.seed;
  std::string pooling;
  int recurrent_size = 0;
};

struct EvalArgs {
  std::string dataset;
  std::string out;
  int folds = 5;
  std::uint64_t seed = 2018;
  std::string presets = "custom,sequence,combined";
  std::string modes = "keep-all,average,most-picked";
  int iterations = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  GeneratorConfig cfg;
  cfg.seed = a.seed;
  cfg.n_tracks = a.tracks;
  cfg.n_users = a.users;
  cfg.n_ratings = a.ratings;
  cfg.susceptibility_spread = a.susceptibility;
  cfg.noise_spread = a.noise;
  cfg.physics = physics_from_flag(a.config);
  const OracleCoefficients oracle = a.oracle.empty() ? OracleCoefficients::defaults() : oracle_from_json(read_json_file(a.oracle));
  const Dataset dataset = generate_dataset(cfg, oracle);
  write_synthetic_dataset(dataset, oracle, a.out);
  out << "wrote " << dataset.tracks.size() << " tracks and " << dataset.ratings.size() << " ratings to " << a.out
      << "\n";
  return 0;
}

int cmd_annotate(const std::string& in, const std::string& out_path, const std::string& config, std::ostream& out) {
  const PhysicsConfig physics = physics_from_flag(config);
  const auto doc = read_json_file(in);
  Track track = track_from_request(doc, physics);
  if (doc.contains("format_version")) track = annotate(track, physics);
  save_track(track, out_path);
  out << "annotated " << track.id << ": " << track.points.size() << " points -> " << out_path << "\n";
  return 0;
}

int cmd_features(const std::string& dataset, const std::vector<std::string>& tracks, const std::string& out_path,
                 std::ostream& out) {
  std::vector<Track> loaded;
  if (!dataset.empty()) loaded = load_dataset(dataset).tracks;
  for (const auto& path : tracks) loaded.push_back(load_track(path));
  if (loaded.empty()) throw Error(ErrorCode::MissingInput, "no tracks given (use --dataset or --track)");
  const std::string csv = features_csv(loaded);
  if (out_path.empty()) {
    out << csv;
  } else {
    write_text_file(out_path, csv);
  }
  return 0;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Dataset dataset = load_dataset(a.dataset);
  NetworkConfig cfg = find_preset(a.preset).config;
  if (a.iterations > 0) cfg.iterations = a.iterations;
  if (a.learning_rate > 0.0) cfg.learning_rate = a.learning_rate;
  if (a.recurrent_size > 0) cfg.recurrent_size = a.recurrent_size;
  if (!a.pooling.empty()) cfg.pooling = parse_pooling(a.pooling);
  cfg.seed = a.seed;
  const auto examples = assemble_examples(dataset, parse_aggregation_mode(a.mode));

  std::map<std::string, std::shared_ptr<const ModelInput>> inputs;
  for (const auto& t : dataset.tracks) inputs.emplace(t.id, std::make_shared<const ModelInput>(make_input(t)));
  std::vector<TrainingExample> training;
  for (const auto& ex : examples) training.push_back({inputs.at(ex.track_id), ex.target});

  NetworkModel model = init_model(cfg);
  fit_normalizers(model, training);
  const TrainResult result = train(model, training, {});
  save_model(model, a.out);
  char line[160];
  std::snprintf(line, sizeof line, "trained %s on %zu examples: loss %.6f -> %.6f\n", a.preset.c_str(),
                training.size(), result.initial_loss, result.loss.empty() ? result.initial_loss : result.loss.back());
  out << line << "saved " << a.out << "\n";
  return 0;
}

int cmd_predict(const std::string& model_flag, const std::string& track_path, const std::string& config,
                std::ostream& out) {
  const NetworkModel model = load_model(model_path_or_env(model_flag));
  const Track track = track_from_request(read_json_file(track_path), physics_from_flag(config));
  out << predict_document(model, track);
  return 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset dataset = load_dataset(a.dataset);
  std::vector<Preset> presets;
  for (const auto& name : split_list(a.presets)) {
    presets.push_back(find_preset(name));
    if (a.iterations > 0) presets.back().config.iterations = a.iterations;
  }
  std::vector<AggregationMode> modes;
  for (const auto& name : split_list(a.modes)) modes.push_back(parse_aggregation_mode(name));
  if (presets.empty() || modes.empty()) throw Error(ErrorCode::InvalidConfig, "need at least one preset and one mode");
  if (a.folds < 2) throw Error(ErrorCode::InvalidConfig, "--folds must be at least 2");

  const auto nausea = static_cast<std::size_t>(Category::Nausea);
  const EvalReport report = run_protocol(dataset, presets, modes, a.folds, a.seed, [&](const CellResult& c) {
    char line[200];
    if (c.ok) {
      std::snprintf(line, sizeof line, "%s %s fold %d: nausea %.1f%% %.3f\n", c.preset.c_str(),
                    std::string(to_string(c.mode)).c_str(), c.fold, c.scores[nausea].percent_correct,
                    c.scores[nausea].mean_error);
    } else {
      std::snprintf(line, sizeof line, "%s %s fold %d: failed: %s\n", c.preset.c_str(),
                    std::string(to_string(c.mode)).c_str(), c.fold, c.error.c_str());
    }
    err << line << std::flush;
  });
  write_report(report, a.out);
  out << render_report(report).table;
  return 0;
}

int cmd_serve(const std::string& model_flag, const std::string& bind, const std::string& config, std::ostream& out,
              std::ostream& err) {
  const auto [host, port] = parse_bind(bind);
  ModelStore store(model_path_or_env(model_flag));
  try {
    store.reload();
  } catch (const Error& e) {
    err << error_json(e) << "\n";  // keep serving 503 until /reload succeeds
  }
  httplib::Server server;
  install_routes(server, store, physics_from_flag(config));
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + std::string(bind));
  out << "listening on " << host << ":" << bound << std::endl;
  server.listen_after_bind();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rollercoaster motion-sickness toolkit", "rcvr"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic rated dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--tracks", synth.tracks, "Number of tracks");
  synth_cmd->add_option("--users", synth.users, "Number of raters");
  synth_cmd->add_option("--ratings", synth.ratings, "Number of ratings");
  synth_cmd->add_option("--susceptibility", synth.susceptibility, "Per-user nausea/intensity offset spread");
  synth_cmd->add_option("--noise", synth.noise, "Per-rating offset spread");
  synth_cmd->add_option("--oracle", synth.oracle, "Oracle coefficient JSON");
  synth_cmd->add_option("--config", synth.config, "Physics config JSON");

  std::string annotate_in, annotate_out, annotate_config;
  auto* annotate_cmd = app.add_subcommand("annotate", "Compute speeds, frames and g-forces for a track or geometry");
  annotate_cmd->add_option("--in", annotate_in, "Track or geometry JSON")->required();
  annotate_cmd->add_option("--out", annotate_out, "Output track file")->required();
  annotate_cmd->add_option("--config", annotate_config, "Physics config JSON");

  std::string features_dataset, features_out;
  std::vector<std::string> features_tracks;
  auto* features_cmd = app.add_subcommand("features", "Export the 25 custom features as CSV");
  features_cmd->add_option("--dataset", features_dataset, "Dataset manifest");
  features_cmd->add_option("--track", features_tracks, "Track file (repeatable)");
  features_cmd->add_option("--out", features_out, "CSV output file (default stdout)");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset");
  train_cmd->add_option("--dataset", train_args.dataset, "Dataset manifest")->required();
  train_cmd->add_option("--out", train_args.out, "Model output file")->required();
  train_cmd->add_option("--preset", train_args.preset, "custom, sequence or combined");
  train_cmd->add_option("--mode", train_args.mode, "keep-all, average or most-picked");
  train_cmd->add_option("--iterations", train_args.iterations, "Override iteration count");
  train_cmd->add_option("--learning-rate", train_args.learning_rate, "Override learning rate");
  train_cmd->add_option("--seed", train_args.seed, "Initialization seed");
  train_cmd->add_option("--pooling", train_args.pooling, "mean or max");
  train_cmd->add_option("--recurrent-size", train_args.recurrent_size, "Override recurrent state size");

  std::string predict_model, predict_track, predict_config;
  auto* predict_cmd = app.add_subcommand("predict", "Predict star ratings for one track");
  predict_cmd->add_option("--model", predict_model, "Model file (default $RCVR_MODEL)");
  predict_cmd->add_option("--track", predict_track, "Track or geometry JSON")->required();
  predict_cmd->add_option("--config", predict_config, "Physics config JSON for geometry input");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Grouped cross-validation over presets and aggregation modes");
  eval_cmd->add_option("--dataset", eval_args.dataset, "Dataset manifest")->required();
  eval_cmd->add_option("--out-dir,--out", eval_args.out, "Report directory")->required();
  eval_cmd->add_option("--folds", eval_args.folds, "Number of folds");
  eval_cmd->add_option("--seed", eval_args.seed, "Fold assignment seed");
  eval_cmd->add_option("--presets", eval_args.presets, "Comma-separated presets");
  eval_cmd->add_option("--modes", eval_args.modes, "Comma-separated aggregation modes");
  eval_cmd->add_option("--iterations", eval_args.iterations, "Override iteration count");

  std::string serve_model, serve_bind = kDefaultBind, serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP prediction service");
  serve_cmd->add_option("--model", serve_model, "Model file (default $RCVR_MODEL)");
  serve_cmd->add_option("--bind", serve_bind, "host:port");
  serve_cmd->add_option("--config", serve_config, "Physics config JSON for geometry requests");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << sub->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth, out);
    if (annotate_cmd->parsed()) return cmd_annotate(annotate_in, annotate_out, annotate_config, out);
    if (features_cmd->parsed()) return cmd_features(features_dataset, features_tracks, features_out, out);
    if (train_cmd->parsed()) return cmd_train(train_args, out);
    if (predict_cmd->parsed()) return cmd_predict(predict_model, predict_track, predict_config, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, out, err);
    if (serve_cmd->parsed()) return cmd_serve(serve_model, serve_bind, serve_config, out, err);
  } catch (const Error& e) {
    err << error_json(e) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << error_json("Internal", e.what()) << "\n";
    return 1;
  }
  return 2;
}

}  // namespace rcvr::app
