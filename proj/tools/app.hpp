#pragma once

#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcvr/error.hpp"
#include "rcvr/kinematics.hpp"
#include "rcvr/net.hpp"
#include "rcvr/track.hpp"

namespace rcvr::app {

inline constexpr const char* kModelEnv = "RCVR_MODEL";
inline constexpr const char* kDefaultBind = "127.0.0.1:8080";
/// Upper bound on g-force samples echoed per axis in a prediction response.
inline constexpr std::size_t kProfileSamples = 200;

/// A request body is either a full track document (has "format_version") or
/// a geometry-only request:
///   {"points": [[x,y,z], ...], "coaster_type"?, "id"?, "dt"?, "physics"?}
/// Geometry is retimed along the polyline and annotated with the physics
/// overrides applied on top of `base`.
Track track_from_request(const nlohmann::json& body, const PhysicsConfig& base);
Track track_from_request_text(std::string_view text, const PhysicsConfig& base);

/// The prediction response shared by `rcvr predict` and POST /predict:
/// stars, per-head probabilities, the feature vector, and a strided g-force
/// profile. Ends with a newline.
std::string predict_document(const NetworkModel& model, const Track& track);

/// GET /model body: config, normalizer ranges, and training summary.
std::string model_summary(const NetworkModel& model);

/// {"error":{"code","message","index"}} on one line, no trailing newline.
std::string error_json(std::string_view code, std::string_view message, std::optional<std::size_t> index = {});
std::string error_json(const Error& error);

/// Reads a JSON physics override file on top of the defaults.
PhysicsConfig load_physics_config(const std::string& path);

/// Holds the immutable model snapshot served to requests. Readers copy the
/// pointer under the lock and keep it for the whole request.
class ModelStore {
 public:
  explicit ModelStore(std::string path = {}) : path_(std::move(path)) {}

  std::shared_ptr<const NetworkModel> snapshot() const;
  /// Loads from `path` (or the remembered path when empty) and swaps the
  /// snapshot in. On failure the previous snapshot stays live.
  void reload(const std::string& path = {});
  std::string path() const;

 private:
  mutable std::mutex mutex_;
  std::string path_;
  std::shared_ptr<const NetworkModel> model_;
};

/// HTTP status for a domain error raised while handling a request.
int http_status(ErrorCode code);

/// Parses "host:port". Throws InvalidConfig.
std::pair<std::string, int> parse_bind(std::string_view bind);

/// Entry point behind the `rcvr` binary. `args` excludes the program name.
/// Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rcvr::app
