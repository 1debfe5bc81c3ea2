#include "service.hpp"

namespace rcvr::app {

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body + "\n", kJson);
}

void send_error(httplib::Response& res, const Error& e) { send_error(res, http_status(e.code()), error_json(e)); }

void send_unavailable(httplib::Response& res) {
  send_error(res, 503, error_json("ModelNotLoaded", "no model is loaded"));
}

}  // namespace

void install_routes(httplib::Server& server, ModelStore& store, const PhysicsConfig& physics) {
  server.Get("/healthz", [&store](const httplib::Request&, httplib::Response& res) {
    if (!store.snapshot()) return send_unavailable(res);
    res.set_content("{\"status\":\"ok\"}\n", kJson);
  });

  server.Get("/model", [&store](const httplib::Request&, httplib::Response& res) {
    const auto model = store.snapshot();
    if (!model) return send_unavailable(res);
    res.set_content(model_summary(*model), kJson);
  });

  server.Post("/predict", [&store, physics](const httplib::Request& req, httplib::Response& res) {
    const auto model = store.snapshot();
    if (!model) return send_unavailable(res);
    try {
      const Track track = track_from_request_text(req.body, physics);
      res.set_content(predict_document(*model, track), kJson);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_error(res, 500, error_json("Internal", e.what()));
    }
  });

  server.Post("/reload", [&store](const httplib::Request& req, httplib::Response& res) {
    std::string path;
    if (!req.body.empty()) {
      const auto body = nlohmann::json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) {
        return send_error(res, 400, error_json("MalformedSyntax", "reload body must be a JSON object"));
      }
      if (body.contains("path")) {
        if (!body["path"].is_string()) {
          return send_error(res, 400, error_json("MalformedSyntax", "\"path\" must be a string"));
        }
        path = body["path"].get<std::string>();
      }
    }
    try {
      store.reload(path);
      nlohmann::ordered_json doc;
      doc["status"] = "reloaded";
      doc["path"] = store.path();
      res.set_content(doc.dump() + "\n", kJson);
    } catch (const Error& e) {
      send_error(res, e);
    }
  });
}

}  // namespace rcvr::app
