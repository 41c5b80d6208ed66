#include "sensitest/service.hpp"

#include "sensitest/path_io.hpp"
#include "sensitest/serialize.hpp"

#include "httplib.h"

#include <cstdlib>
#include <iostream>

namespace sensitest {

ServiceConfig service_config_from_env(ServiceConfig base) {
  if (const char* listen = std::getenv("SENSITEST_LISTEN")) {
    const std::string text(listen);
    const auto colon = text.rfind(':');
    if (colon != std::string::npos) {
      base.host = text.substr(0, colon);
      base.port = std::stoi(text.substr(colon + 1));
    }
  }
  if (const char* dir = std::getenv("SENSITEST_DATA_DIR")) base.data_dir = dir;
  return base;
}

json session_json(const Session& s) {
  json trials = json::array();
  for (const auto& t : s.trials) trials.push_back({{"index", t.index}, {"x", t.x}, {"y", t.y}});
  json j{{"id", s.id},
         {"rule", to_json(s.rule)},
         {"link", std::string(to_string(s.link))},
         {"status", std::string(to_string(s.status))},
         {"created_at", s.created_at},
         {"trials", trials},
         {"pending_trial_index", s.pending_index()}};
  j["next_level"] = s.status == SessionStatus::active ? json(s.next_level) : json(nullptr);
  if (uses_noise(s.rule)) j["noise"] = s.noise;
  return j;
}

json estimate_json(const SessionEstimate& e) {
  if (!e.estimable) return {{"estimable", false}, {"status", "NOT_ESTIMABLE"}, {"reason", e.reason}};
  return {{"estimable", true},
          {"status", "ESTIMABLE"},
          {"estimate", to_json(e.estimate)},
          {"q", e.q},
          {"level", e.level},
          {"gamma_q", e.gamma_q},
          {"wald", to_json(e.wald)},
          {"fieller", to_json(e.fieller)}};
}

namespace {

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const std::string& field = {}) {
  json body{{"code", code}, {"message", message}};
  if (!field.empty()) body["field"] = field;
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class Handler>
auto guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const SessionError& e) {
      send_error(res, e.status, e.code, e.what(), e.field);
    } catch (const ValidationError& e) {
      send_error(res, 422, "validation_error", e.what(), e.field);
    } catch (const json::exception& e) {
      send_error(res, 400, "bad_request", std::string("malformed JSON: ") + e.what());
    } catch (const DomainError& e) {
      send_error(res, 422, "validation_error", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal_error", e.what());
    }
  };
}

double query_number(const httplib::Request& req, const char* name, double fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string text = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw SessionError(422, "validation_error", std::string(name) + " must be a number", name);
  }
}

}  // namespace

void register_routes(httplib::Server& server, SessionStore& store) {
  server.Post("/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
                const json body = json::parse(req.body);
                if (!body.is_object()) throw SessionError(422, "validation_error", "body must be a JSON object");
                const json& rule_json = body.contains("rule") ? body["rule"] : body;
                Link link = Link::logit;
                if (body.contains("link")) {
                  if (!body["link"].is_string()) throw SessionError(422, "validation_error", "link must be a string", "link");
                  try {
                    link = parse_link(body["link"].get<std::string>());
                  } catch (const DomainError& e) {
                    throw SessionError(422, "validation_error", e.what(), "link");
                  }
                }
                const Session s = store.create(rule_from_json(rule_json), link);
                send_json(res, 201, session_json(s));
              }));

  server.Get(R"(/sessions/([A-Za-z0-9]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, session_json(store.get(req.matches[1])));
             }));

  server.Post(R"(/sessions/([A-Za-z0-9]+)/outcomes)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                const json body = json::parse(req.body);
                if (!body.is_object() || !body.contains("y")) throw SessionError(422, "validation_error", "missing y", "y");
                const json& yj = body["y"];
                if (!yj.is_number_integer() || (yj.get<long long>() != 0 && yj.get<long long>() != 1)) {
                  throw SessionError(422, "validation_error", "y must be 0 or 1", "y");
                }
                std::optional<std::size_t> index;
                if (body.contains("trial_index") && !body["trial_index"].is_null()) {
                  if (!body["trial_index"].is_number_unsigned()) {
                    throw SessionError(422, "validation_error", "trial_index must be a positive integer", "trial_index");
                  }
                  index = body["trial_index"].get<std::size_t>();
                }
                const auto rec = store.record_outcome(req.matches[1], static_cast<int>(yj.get<long long>()), index);
                send_json(res, 200,
                          {{"recorded_trial_index", rec.recorded_index},
                           {"trial_index", rec.trial_index},
                           {"next_level", rec.next_level}});
              }));

  server.Get(R"(/sessions/([A-Za-z0-9]+)/estimate)",
             guarded([&store](const httplib::Request& req, httplib::Response& res) {
               const double q = query_number(req, "q", 0.5);
               const double level = query_number(req, "level", 0.95);
               send_json(res, 200, estimate_json(store.estimate(req.matches[1], q, level)));
             }));

  server.Get(R"(/sessions/([A-Za-z0-9]+)/export)",
             guarded([&store](const httplib::Request& req, httplib::Response& res) {
               res.status = 200;
               res.set_content(path_csv(store.export_path(req.matches[1])), "text/csv");
             }));

  server.Post(R"(/sessions/([A-Za-z0-9]+)/close)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, session_json(store.close(req.matches[1])));
              }));
}

int run_service(const ServiceConfig& config) {
  SessionStore store(config.data_dir);
  httplib::Server server;
  register_routes(server, store);
  std::cerr << "listening on " << config.host << ':' << config.port << " (data: " << config.data_dir << ", "
            << store.size() << " sessions loaded)\n";
  if (!server.listen(config.host, config.port)) {
    std::cerr << "cannot listen on " << config.host << ':' << config.port << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sensitest
