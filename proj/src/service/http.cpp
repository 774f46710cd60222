// Copyright 2026 The Triage Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "triage/service/http.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace triage::service {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto body = json::parse(req.body);
    if (!body.is_object()) throw ValidationError("request body must be a JSON object");
    return body;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON body: ") + e.what());
  }
}

template <typename T>
T required(const json& body, const char* key) {
  if (!body.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const json& body, const char* key, T fallback) {
  if (!body.contains(key) || body.at(key).is_null()) return fallback;
  return required<T>(body, key);
}

void reply(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Runs a handler and maps failures onto status codes.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, 200, fn(req));
    } catch (const Error& e) {
      reply(res, http_status(e.kind()), error_json(to_string(e.kind()), e.what()));
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      reply(res, 500, error_json("internal", e.what()));
    }
  };
}

}  // namespace

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
    case ErrorKind::kConfig: return 400;
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kUnavailable: return 503;
    case ErrorKind::kIo:
    case ErrorKind::kTraining: return 500;
  }
  return 500;
}

ordered_json error_json(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

ordered_json recommendation_json(const ensemble::Recommendation& rec) {
  ordered_json j;
  j["request_id"] = rec.request_id;
  j["teams"] = ordered_json::array();
  for (const auto& t : rec.teams) {
    j["teams"].push_back({{"team", t.team}, {"confidence", t.confidence}, {"models", t.models}});
  }
  j["models_responded"] = rec.models_responded;
  j["models_total"] = rec.models_total;
  return j;
}

ordered_json insights_json(const Insights& insights) {
  return {{"team", insights.team},
          {"similar_count", insights.similar_count},
          {"unique_oces", insights.unique_oces},
          {"keywords", insights.keywords}};
}

corpus::Incident draft_from_json(const json& body) {
  for (const auto& [key, value] : body.items()) {
    if (key != "title" && key != "summary" && key != "contextual") {
      throw ValidationError("unknown draft field '" + key + "'");
    }
  }
  corpus::Incident draft;
  draft.title = required<std::string>(body, "title");
  draft.summary = optional_field<std::string>(body, "summary", "");
  draft.status = corpus::IncidentStatus::kActive;
  if (!body.contains("contextual") || body.at("contextual").is_null()) return draft;
  const auto& ctx = body.at("contextual");
  if (!ctx.is_object()) throw ValidationError("field 'contextual' must be an object");
  for (const auto& [key, value] : ctx.items()) {
    if (key == "source_name") {
      draft.source_name = required<std::string>(ctx, "source_name");
    } else if (key == "originating_service_id") {
      draft.originating_service_id = required<std::string>(ctx, "originating_service_id");
    } else if (key == "occurring_device_name") {
      draft.occurring_device_name = required<std::string>(ctx, "occurring_device_name");
    } else if (key == "raising_dc") {
      draft.raising_dc = required<std::string>(ctx, "raising_dc");
    } else if (key == "keywords") {
      draft.keywords = required<std::vector<std::string>>(ctx, "keywords");
    } else if (key == "severity") {
      draft.severity = required<int>(ctx, "severity");
      if (draft.severity < 0 || draft.severity > 4) throw ValidationError("severity must lie in 0..4");
    } else if (key == "incident_type") {
      const auto type = required<std::string>(ctx, "incident_type");
      if (type == "CRI") {
        draft.incident_type = corpus::IncidentType::kCri;
      } else if (type != "LSI") {
        throw ValidationError("incident_type must be LSI or CRI");
      }
    } else {
      throw ValidationError("unknown contextual field '" + key + "'");
    }
  }
  return draft;
}

HttpServer::HttpServer(TriageService& service, HttpOptions options)
    : service_(service), options_(options), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& s = *server_;
  s.Post("/recommend", guarded([this](const httplib::Request& req) {
           const auto body = parse_body(req);
           return recommendation_json(service_.recommend(required<std::string>(body, "incident_id")));
         }));
  s.Post("/recommend/draft", guarded([this](const httplib::Request& req) {
           return recommendation_json(service_.recommend_draft(draft_from_json(parse_body(req))));
         }));
  s.Get("/insights", guarded([this](const httplib::Request& req) {
          if (!req.has_param("request_id") || !req.has_param("team")) {
            throw ValidationError("query parameters request_id and team are required");
          }
          return insights_json(service_.insights(req.get_param_value("request_id"), req.get_param_value("team")));
        }));
  s.Post("/feedback", guarded([this](const httplib::Request& req) {
           const auto body = parse_body(req);
           return service_
               .record_feedback(required<std::string>(body, "request_id"), required<std::string>(body, "chosen_team"),
                                required<bool>(body, "accepted"))
               .to_json();
         }));
  s.Post(R"(/route/([^/]+))", guarded([this](const httplib::Request& req) {
           const auto body = parse_body(req);
           corpus::Incident incident;
           if (body.contains("incident")) {
             incident = corpus::incident_from_json(body.at("incident"));
           } else {
             const auto id = required<std::string>(body, "incident_id");
             const auto* stored = service_.find_incident(id);
             if (!stored) throw NotFoundError("unknown incident " + id);
             incident = *stored;
           }
           return service_.route(req.matches[1].str(), incident).to_json();
         }));
  s.Post("/admin/retrain", guarded([this](const httplib::Request& req) {
           const auto body = parse_body(req);
           const auto corpus_path = required<std::string>(body, "corpus");
           auto config = service_.serving_config();
           if (body.contains("config")) {
             auto merged = config.to_json();
             merged.update(body.at("config"), true);
             config = PipelineConfig::from_json(json::parse(merged.dump()));
           }
           auto result = service_.retrain(corpus_path, config);
           auto j = result.to_json();
           j["report"] = result.report.to_json();
           return j;
         }));
  if (options_.fault_injection) {
    s.Post(R"(/admin/models/([^/]+)/fail)", guarded([this](const httplib::Request& req) {
             const auto body = parse_body(req);
             const auto id = req.matches[1].str();
             const bool failed = optional_field<bool>(body, "failed", true);
             service_.set_model_failed(id, failed);
             return ordered_json{{"id", id}, {"failed", failed}};
           }));
  }
  s.Get("/health", guarded([this](const httplib::Request&) { return service_.health().to_json(); }));
}

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::serve() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace triage::service
