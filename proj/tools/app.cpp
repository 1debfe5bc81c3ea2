#include "app.hpp"

#include <algorithm>
#include <charconv>

#include "rcvr/features.hpp"
#include "rcvr/io.hpp"

namespace rcvr::app {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<const char*, kCategoryCount> kCategoryKeys = {"fun", "intensity", "nausea", "price"};

Vec3 point_from_json(const json& p, std::size_t index) {
  if (!p.is_array() || p.size() != 3) throw Error(ErrorCode::MalformedSyntax, "point must be [x, y, z]", index);
  std::array<double, 3> v{};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!p[k].is_number()) throw Error(ErrorCode::MalformedSyntax, "point coordinates must be numbers", index);
    v[k] = p[k].get<double>();
  }
  return {v[0], v[1], v[2]};
}

Track track_from_geometry(const json& body, const PhysicsConfig& base) {
  static const std::array<std::string_view, 5> kKeys = {"points", "coaster_type", "id", "dt", "physics"};
  for (const auto& [key, value] : body.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw Error(ErrorCode::MalformedSyntax, "unknown key \"" + key + "\" in geometry request");
    }
  }
  if (!body.contains("points") || !body["points"].is_array()) {
    throw Error(ErrorCode::MalformedSyntax, "geometry request needs a \"points\" array");
  }
  std::vector<Vec3> path;
  for (std::size_t i = 0; i < body["points"].size(); ++i) path.push_back(point_from_json(body["points"][i], i));
  if (path.size() < 2) throw Error(ErrorCode::TooShort, "geometry needs at least 2 points");

  PhysicsConfig physics = base;
  if (body.contains("physics")) physics = physics_config_from_json(body["physics"], base);
  physics.validate();

  double dt = 0.1;
  if (body.contains("dt")) {
    if (!body["dt"].is_number()) throw Error(ErrorCode::MalformedSyntax, "\"dt\" must be a number");
    dt = body["dt"].get<double>();
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::InvariantViolation, "dt > 0");

  int type = static_cast<int>(CoasterType::Normal);
  if (body.contains("coaster_type")) {
    if (!body["coaster_type"].is_number_integer()) {
      throw Error(ErrorCode::MalformedSyntax, "\"coaster_type\" must be an integer");
    }
    type = body["coaster_type"].get<int>();
  }
  if (type < 0 || type > 2) throw Error(ErrorCode::InvariantViolation, "coaster_type in {0,1,2}");

  TrackGeometry geometry = retime(path, dt, physics);
  geometry.id = "geometry";
  if (body.contains("id")) {
    if (!body["id"].is_string()) throw Error(ErrorCode::MalformedSyntax, "\"id\" must be a string");
    geometry.id = body["id"].get<std::string>();
  }
  geometry.coaster_type = static_cast<CoasterType>(type);
  return annotate(geometry, physics);
}

ordered_json normalizer_json(const Normalizer& n, std::span<const std::string_view> names) {
  ordered_json out = ordered_json::object();
  for (std::size_t d = 0; d < n.dim() && d < names.size(); ++d) {
    out[std::string(names[d])] = {n.lo()[d], n.hi()[d]};
  }
  return out;
}

}  // namespace

Track track_from_request(const json& body, const PhysicsConfig& base) {
  if (!body.is_object()) throw Error(ErrorCode::MalformedSyntax, "request body must be a JSON object");
  if (body.contains("format_version")) return track_from_json(body);
  return track_from_geometry(body, base);
}

Track track_from_request_text(std::string_view text, const PhysicsConfig& base) {
  json body;
  try {
    body = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedSyntax, std::string("invalid JSON: ") + e.what());
  }
  return track_from_request(body, base);
}

std::string predict_document(const NetworkModel& model, const Track& track) {
  const ModelInput input = make_input(track);
  const Prediction prediction = forward(model, input);
  const StarTuple stars = prediction.stars();

  ordered_json doc;
  doc["track_id"] = track.id;
  ordered_json star_obj = ordered_json::object();
  ordered_json prob_obj = ordered_json::object();
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    star_obj[kCategoryKeys[c]] = stars[c];
    prob_obj[kCategoryKeys[c]] =
        std::vector<double>(prediction.probabilities[c].begin(), prediction.probabilities[c].end());
  }
  doc["stars"] = star_obj;
  doc["probabilities"] = prob_obj;

  ordered_json features = ordered_json::object();
  const auto& names = custom_feature_names();
  const FeatureVector fv = input.custom ? *input.custom : extract_custom(track);
  for (std::size_t j = 0; j < fv.size(); ++j) features[std::string(names[j])] = fv[j];
  doc["features"] = features;

  const std::size_t n = track.points.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + kProfileSamples - 1) / kProfileSamples);
  ordered_json profile;
  profile["dt"] = track.dt * static_cast<double>(stride);
  profile["stride"] = stride;
  std::vector<double> lon, lat, vert;
  for (std::size_t i = 0; i < n; i += stride) {
    lon.push_back(track.points[i].gforce.x);
    lat.push_back(track.points[i].gforce.y);
    vert.push_back(track.points[i].gforce.z);
  }
  profile["longitudinal"] = lon;
  profile["lateral"] = lat;
  profile["vertical"] = vert;
  doc["gforce_profile"] = profile;
  return doc.dump() + "\n";
}

std::string model_summary(const NetworkModel& model) {
  ordered_json doc;
  doc["config"] = ordered_json::parse(config_to_json(model.config).dump());
  ordered_json norms = ordered_json::object();
  if (model.config.uses_custom()) {
    const auto& names = custom_feature_names();
    norms["custom"] = normalizer_json(model.custom_normalizer, names);
  }
  if (model.config.uses_sequence()) {
    const auto& names = sequence_feature_names();
    norms["sequence"] = normalizer_json(model.sequence_normalizer, names);
  }
  doc["normalizers"] = norms;
  doc["parameter_count"] = model.params.size();
  doc["iterations_trained"] = model.loss_history.size();
  if (!model.loss_history.empty()) doc["final_loss"] = model.loss_history.back();
  return doc.dump() + "\n";
}

std::string error_json(std::string_view code, std::string_view message, std::optional<std::size_t> index) {
  ordered_json err;
  err["code"] = code;
  err["message"] = message;
  err["index"] = index ? ordered_json(*index) : ordered_json(nullptr);
  ordered_json doc;
  doc["error"] = err;
  return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string error_json(const Error& error) { return error_json(to_string(error.code()), error.detail(), error.index()); }

PhysicsConfig load_physics_config(const std::string& path) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedSyntax, path + ": invalid JSON: " + e.what());
  }
  PhysicsConfig cfg = physics_config_from_json(doc);
  cfg.validate();
  return cfg;
}

std::shared_ptr<const NetworkModel> ModelStore::snapshot() const {
  std::lock_guard lock(mutex_);
  return model_;
}

void ModelStore::reload(const std::string& path) {
  std::string target;
  {
    std::lock_guard lock(mutex_);
    target = path.empty() ? path_ : path;
  }
  if (target.empty()) throw Error(ErrorCode::MissingInput, "no model path configured (use --model or RCVR_MODEL)");
  auto fresh = std::make_shared<const NetworkModel>(load_model(target));
  std::lock_guard lock(mutex_);
  path_ = target;
  model_ = std::move(fresh);
}

std::string ModelStore::path() const {
  std::lock_guard lock(mutex_);
  return path_;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedSyntax:
    case ErrorCode::VersionUnsupported:
    case ErrorCode::MissingInput:
      return 400;
    case ErrorCode::IoError:
      return 500;
    default:
      return 422;
  }
}

std::pair<std::string, int> parse_bind(std::string_view bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorCode::InvalidConfig, "bind address must be host:port, got \"" + std::string(bind) + "\"");
  }
  const auto port_text = bind.substr(colon + 1);
  int port = -1;
  const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || end != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw Error(ErrorCode::InvalidConfig, "invalid port in bind address \"" + std::string(bind) + "\"");
  }
  return {std::string(bind.substr(0, colon)), port};
}

}  // namespace rcvr::app
