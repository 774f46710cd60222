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

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "triage/corpus/corpus.hpp"
#include "triage/ensemble/merge.hpp"
#include "triage/ensemble/rules.hpp"
#include "triage/service/pipeline.hpp"
#include "triage/service/registry.hpp"

namespace triage::service {

struct ServiceConfig {
  std::filesystem::path artifact_root;
  /// feedback.jsonl and routing.jsonl are appended here.
  std::filesystem::path log_dir = "logs";
  /// Workflow rules, one `<team_id>.json` per listening team.
  std::filesystem::path rules_dir = "rules";
  int deadline_ms = kDefaultDeadlineMs;
  /// Issued request ids stay valid for feedback and insights this long.
  std::int64_t request_retention_seconds = 24 * 3600;
  std::size_t max_retained_requests = 100000;
};

struct Insights {
  std::string team;
  std::size_t similar_count = 0;
  std::size_t unique_oces = 0;
  std::vector<std::string> keywords;  // at most kMaxInsightKeywords
};
inline constexpr std::size_t kMaxInsightKeywords = 5;

struct FeedbackRecord {
  std::string request_id;
  std::vector<std::string> shown_teams;
  std::string chosen_team;
  bool accepted = false;
  bool off_list = false;
  std::int64_t timestamp = 0;
  nlohmann::ordered_json to_json() const;
};

struct RoutingOutcome {
  std::string team;        // empty when nothing routes
  std::string provenance;  // "rule", "ml" or "none"
  std::string rule_id;
  std::string request_id;
  nlohmann::ordered_json to_json() const;
};

struct Health {
  std::string status;  // "ok", "degraded" or "down"
  std::size_t models_total = 0;
  std::size_t models_enabled = 0;
  std::size_t models_failed = 0;
  std::string manifest_version;
  nlohmann::ordered_json to_json() const;
};

/// Request handling over the serving artifact: model fan-out and merge,
/// insights, feedback capture, workflow routing and retraining.
class TriageService {
 public:
  /// Serves the current artifact under `config.artifact_root`. The serving
  /// store defaults to the artifact's training corpus.
  explicit TriageService(ServiceConfig config, std::optional<corpus::Corpus> store = std::nullopt);
  /// Serves an in-memory system.
  TriageService(ServiceConfig config, TriageSystem system, corpus::Corpus store, std::string version = "memory");
  ~TriageService();

  /// Throws NotFoundError for an unknown id, UnavailableError when no model
  /// responds.
  ensemble::Recommendation recommend(const std::string& incident_id);
  /// Throws ValidationError for an empty title.
  ensemble::Recommendation recommend_draft(corpus::Incident draft);
  /// Throws NotFoundError for an unknown or expired request id.
  Insights insights(const std::string& request_id, const std::string& team) const;
  Insights insights_for(const corpus::Incident& incident, const std::string& team) const;
  /// Throws NotFoundError for an unknown request, ConflictError when the
  /// request already has feedback.
  FeedbackRecord record_feedback(const std::string& request_id, const std::string& chosen_team, bool accepted);
  /// Rules of `team_id` first, then the ML top-1. Throws ValidationError for
  /// an unsafe team id, UnavailableError when no rule matches and no model
  /// responds.
  RoutingOutcome route(const std::string& team_id, const corpus::Incident& incident);
  /// Retrains into the artifact store and switches serving to the new
  /// version when it is promoted. Throws NotFoundError for a missing corpus
  /// file and ConflictError while another retrain runs.
  RetrainResult retrain(const std::filesystem::path& corpus_path, const PipelineConfig& config);

  /// Fault injection. Throws NotFoundError for an unknown model.
  void set_model_failed(const std::string& model_id, bool failed);
  Health health() const;
  std::vector<RegistryEntry> models() const;
  /// Pipeline config of the serving artifact.
  PipelineConfig serving_config() const;
  const corpus::Incident* find_incident(const std::string& id) const;

 private:
  struct Deployment;
  struct RequestRecord {
    std::vector<std::string> shown_teams;
    corpus::Incident incident;
    std::int64_t issued_at = 0;
    bool has_feedback = false;
  };

  std::shared_ptr<Deployment> deployment() const;
  void deploy(TriageSystem system, std::string version);
  ensemble::Recommendation run(const corpus::Incident& incident);
  std::string next_request_id();
  void remember(const std::string& request_id, const ensemble::Recommendation& rec, const corpus::Incident& incident);
  void expire_requests(std::int64_t now);
  std::optional<RequestRecord> lookup(const std::string& request_id) const;
  void append_log(const std::string& file, const nlohmann::ordered_json& line);

  ServiceConfig config_;
  corpus::Corpus store_;

  mutable std::mutex deploy_mu_;
  std::shared_ptr<Deployment> deployment_;

  mutable std::mutex requests_mu_;
  std::map<std::string, RequestRecord> requests_;
  std::deque<std::string> request_order_;
  std::uint64_t request_nonce_ = 0;
  std::uint64_t request_counter_ = 0;

  std::mutex log_mu_;
  std::mutex retrain_mu_;
};

/// Current UTC time in seconds.
std::int64_t unix_now();

}  // namespace triage::service
