#include "rcvr/track.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "rcvr/error.hpp"
#include "rcvr/io.hpp"

namespace rcvr {

namespace {

using nlohmann::json;

[[noreturn]] void violation(const std::string& what, std::optional<std::size_t> index = std::nullopt) {
  throw Error(ErrorCode::InvariantViolation, what, index);
}

[[noreturn]] void malformed(const std::string& what, std::optional<std::size_t> index = std::nullopt) {
  throw Error(ErrorCode::MalformedSyntax, what, index);
}

bool finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where,
                  std::optional<std::size_t> index = std::nullopt) {
  if (!obj.is_object()) malformed(where + " must be an object", index);
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!names.count(key)) malformed("unknown key \"" + key + "\" in " + where, index);
  }
  for (const auto& key : names) {
    if (!obj.contains(key)) malformed("missing key \"" + key + "\" in " + where, index);
  }
}

double read_number(const json& value, const std::string& what, std::optional<std::size_t> index) {
  if (!value.is_number()) malformed(what + " must be a number", index);
  return value.get<double>();
}

Vec3 read_vec3(const json& value, const std::string& what, std::size_t index) {
  if (!value.is_array() || value.size() != 3) malformed(what + " must be an array of 3 numbers", index);
  return {read_number(value[0], what, index), read_number(value[1], what, index),
          read_number(value[2], what, index)};
}

void append_vec3(std::string& out, const Vec3& v) {
  out += '[';
  out += format_number(v.x);
  out += ',';
  out += format_number(v.y);
  out += ',';
  out += format_number(v.z);
  out += ']';
}

void append_string(std::string& out, const std::string& s) { out += json(s).dump(); }

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) return "0";  // "-0" would read back as the integer 0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void validate(const Track& track) {
  if (!(track.dt > 0.0) || !std::isfinite(track.dt)) violation("dt > 0");
  const int type = static_cast<int>(track.coaster_type);
  if (type < 0 || type > 2) violation("coaster_type in {0,1,2}");
  if (track.points.size() < 2) violation("points >= 2");

  for (std::size_t i = 0; i < track.points.size(); ++i) {
    const auto& p = track.points[i];
    if (!finite(p.position) || !finite(p.forward) || !finite(p.up) || !std::isfinite(p.speed) ||
        !finite(p.gforce)) {
      violation("finite values", i);
    }
    if (std::abs(p.forward.norm() - 1.0) > kFrameTolerance) violation("|forward| = 1", i);
    if (std::abs(p.up.norm() - 1.0) > kFrameTolerance) violation("|up| = 1", i);
    if (std::abs(p.forward.dot(p.up)) > kFrameTolerance) violation("forward . up = 0", i);
    if (p.speed < 0.0) violation("speed >= 0", i);
  }

  double length = 0.0;
  for (std::size_t i = 0; i + 1 < track.points.size(); ++i) {
    const auto& a = track.points[i];
    const auto& b = track.points[i + 1];
    const double step = (b.position - a.position).norm();
    const double reach = std::max(a.speed, b.speed) * track.dt * kSamplingSlack;
    if (step > reach) violation("sampling consistency", i + 1);
    length += step;
  }
  if (!(length > 0.0)) violation("total length > 0");
}

Track track_from_json(const json& doc) {
  require_keys(doc, {"format_version", "id", "coaster_type", "dt", "points"}, "track");
  const auto& version = doc.at("format_version");
  if (!version.is_number_integer()) malformed("format_version must be an integer");
  if (version.get<long long>() != kTrackFormatVersion) {
    throw Error(ErrorCode::VersionUnsupported, "track format_version " + version.dump() + " is not supported");
  }
  if (!doc.at("id").is_string()) malformed("id must be a string");
  if (!doc.at("coaster_type").is_number_integer()) malformed("coaster_type must be an integer");
  if (!doc.at("points").is_array()) malformed("points must be an array");

  Track track;
  track.id = doc.at("id").get<std::string>();
  track.coaster_type = static_cast<CoasterType>(doc.at("coaster_type").get<int>());
  track.dt = read_number(doc.at("dt"), "dt", std::nullopt);

  const auto& points = doc.at("points");
  track.points.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    require_keys(p, {"p", "f", "u", "v", "g"}, "point", i);
    TrackPoint tp;
    tp.position = read_vec3(p.at("p"), "p", i);
    tp.forward = read_vec3(p.at("f"), "f", i);
    tp.up = read_vec3(p.at("u"), "u", i);
    tp.speed = read_number(p.at("v"), "v", i);
    tp.gforce = read_vec3(p.at("g"), "g", i);
    track.points.push_back(tp);
  }
  validate(track);
  return track;
}

Track parse_track(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  return track_from_json(doc);
}

std::string serialize_track(const Track& track) {
  std::string out;
  out.reserve(64 + track.points.size() * 200);
  out += "{\"format_version\":";
  out += std::to_string(kTrackFormatVersion);
  out += ",\"id\":";
  append_string(out, track.id);
  out += ",\"coaster_type\":";
  out += std::to_string(static_cast<int>(track.coaster_type));
  out += ",\"dt\":";
  out += format_number(track.dt);
  out += ",\"points\":[";
  for (std::size_t i = 0; i < track.points.size(); ++i) {
    const auto& p = track.points[i];
    if (i) out += ',';
    out += "\n{\"p\":";
    append_vec3(out, p.position);
    out += ",\"f\":";
    append_vec3(out, p.forward);
    out += ",\"u\":";
    append_vec3(out, p.up);
    out += ",\"v\":";
    out += format_number(p.speed);
    out += ",\"g\":";
    append_vec3(out, p.gforce);
    out += '}';
  }
  out += "\n]}\n";
  return out;
}

Track load_track(const std::string& path) { return parse_track(read_text_file(path)); }

void save_track(const Track& track, const std::string& path) { write_text_file(path, serialize_track(track)); }

std::vector<Vec3> relative_positions(const Track& track) {
  if (track.points.size() < 2) throw Error(ErrorCode::TooShort, "relative positions need at least 2 points");
  std::vector<Vec3> out;
  out.reserve(track.points.size() - 1);
  for (std::size_t i = 0; i + 1 < track.points.size(); ++i) {
    out.push_back(track.points[i + 1].position - track.points[i].position);
  }
  return out;
}

double total_length(const Track& track) {
  double length = 0.0;
  for (std::size_t i = 0; i + 1 < track.points.size(); ++i) {
    length += (track.points[i + 1].position - track.points[i].position).norm();
  }
  return length;
}

}  // namespace rcvr
