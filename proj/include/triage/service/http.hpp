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

#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "triage/common/error.hpp"
#include "triage/corpus/incident.hpp"
#include "triage/ensemble/merge.hpp"
#include "triage/service/service.hpp"

namespace httplib {
class Server;
}

namespace triage::service {

struct HttpOptions {
  /// Registers POST /admin/models/{id}/fail.
  bool fault_injection = false;
};

/// JSON over HTTP:
///   POST /recommend                {incident_id}
///   POST /recommend/draft          {title, summary?, contextual?}
///   GET  /insights?request_id&team
///   POST /feedback                 {request_id, chosen_team, accepted}
///   POST /route/{team_id}          {incident_id} or {incident}
///   POST /admin/retrain            {corpus, config?}
///   POST /admin/models/{id}/fail   {failed?}
///   GET  /health
/// Errors carry {"error": {"code", "message"}} with status 400, 404, 409,
/// 503 or 500.
class HttpServer {
 public:
  explicit HttpServer(TriageService& service, HttpOptions options = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws IoError.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void serve();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  TriageService& service_;
  HttpOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

int http_status(ErrorKind kind);
nlohmann::ordered_json error_json(const std::string& code, const std::string& message);
nlohmann::ordered_json recommendation_json(const ensemble::Recommendation& rec);
nlohmann::ordered_json insights_json(const Insights& insights);
/// Draft body -> ephemeral incident. Throws ValidationError on unknown or
/// mistyped fields.
corpus::Incident draft_from_json(const nlohmann::json& body);

}  // namespace triage::service
