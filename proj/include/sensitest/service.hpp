#pragma once

#include "sensitest/serialize.hpp"
#include "sensitest/session.hpp"

#include <string>

namespace httplib {
class Server;
}

namespace sensitest {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "sessions";
};

/// Fills unset fields from SENSITEST_LISTEN (host:port) and SENSITEST_DATA_DIR.
ServiceConfig service_config_from_env(ServiceConfig base = {});

/// HTTP+JSON routes:
///   POST /sessions                      {"design": ..., <rule fields>, "link": "logit"}
///   GET  /sessions/{id}
///   POST /sessions/{id}/outcomes        {"y": 0|1, "trial_index": k}
///   GET  /sessions/{id}/estimate?q=0.5&level=0.95
///   GET  /sessions/{id}/export          path CSV
///   POST /sessions/{id}/close
/// Errors are {"code", "message", "field"?}.
void register_routes(httplib::Server& server, SessionStore& store);

/// Blocks until the server stops.
int run_service(const ServiceConfig& config);

json session_json(const Session& s);
json estimate_json(const SessionEstimate& e);

}  // namespace sensitest
