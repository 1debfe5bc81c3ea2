#pragma once

#include "app.hpp"
#include "httplib.h"

namespace rcvr::app {

/// Installs /predict, /model, /healthz and /reload on `server`. Requests read
/// the store's current snapshot; `physics` applies to geometry-only bodies.
void install_routes(httplib::Server& server, ModelStore& store, const PhysicsConfig& physics);

}  // namespace rcvr::app
