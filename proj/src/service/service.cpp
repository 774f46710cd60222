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

#include "triage/service/service.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "triage/common/error.hpp"
#include "triage/common/hash.hpp"
#include "triage/textprep/phrases.hpp"
#include "triage/textprep/pipeline.hpp"

namespace triage::service {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct TriageService::Deployment {
  std::shared_ptr<const TriageSystem> system;
  std::unique_ptr<ModelRegistry> registry;
  std::string version;
};

namespace {

bool safe_team_id(const std::string& id) {
  if (id.empty() || id.front() == '.' || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
           c == '.';
  });
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

ordered_json FeedbackRecord::to_json() const {
  return {{"request_id", request_id}, {"shown_teams", shown_teams}, {"chosen_team", chosen_team},
          {"accepted", accepted},     {"off_list", off_list},       {"timestamp", timestamp}};
}

ordered_json RoutingOutcome::to_json() const {
  return {{"team", team.empty() ? ordered_json(nullptr) : ordered_json(team)},
          {"provenance", provenance},
          {"rule_id", rule_id.empty() ? ordered_json(nullptr) : ordered_json(rule_id)},
          {"request_id", request_id.empty() ? ordered_json(nullptr) : ordered_json(request_id)}};
}

ordered_json Health::to_json() const {
  return {{"status", status},
          {"models_total", models_total},
          {"models_enabled", models_enabled},
          {"models_failed", models_failed},
          {"manifest_version", manifest_version}};
}

TriageService::TriageService(ServiceConfig config, std::optional<corpus::Corpus> store)
    : config_(std::move(config)), request_nonce_(std::random_device{}()) {
  ArtifactStore artifacts(config_.artifact_root);
  const auto version = artifacts.current();
  if (!version) throw NotFoundError("no promoted artifact in " + config_.artifact_root.string());
  auto system = artifacts.load_current();
  store_ = store ? std::move(*store) : system.training_corpus();
  deploy(std::move(system), *version);
}

TriageService::TriageService(ServiceConfig config, TriageSystem system, corpus::Corpus store, std::string version)
    : config_(std::move(config)), store_(std::move(store)), request_nonce_(std::random_device{}()) {
  deploy(std::move(system), std::move(version));
}

TriageService::~TriageService() = default;

std::shared_ptr<TriageService::Deployment> TriageService::deployment() const {
  std::lock_guard lock(deploy_mu_);
  return deployment_;
}

void TriageService::deploy(TriageSystem system, std::string version) {
  auto next = std::make_shared<Deployment>();
  next->system = std::make_shared<const TriageSystem>(std::move(system));
  next->registry = make_registry(next->system, config_.deadline_ms);
  next->version = std::move(version);
  std::lock_guard lock(deploy_mu_);
  if (deployment_) {
    for (const auto& e : deployment_->registry->entries()) {
      if (!e.failed) continue;
      try {
        next->registry->set_failed(e.id, true);
      } catch (const NotFoundError&) {
      }
    }
  }
  deployment_ = std::move(next);
}

ensemble::Recommendation TriageService::run(const corpus::Incident& incident) {
  const auto dep = deployment();
  const auto query = std::make_shared<const PreparedQuery>(dep->system->prepare(incident));
  auto fan = dep->registry->fan_out(query);
  if (fan.outputs.empty()) {
    throw UnavailableError("none of the " + std::to_string(fan.total) + " models returned a recommendation");
  }
  auto rec = ensemble::merge_outputs(fan.outputs);
  rec.models_responded = fan.outputs.size();
  rec.models_total = fan.total;
  return rec;
}

std::string TriageService::next_request_id() {
  std::lock_guard lock(requests_mu_);
  char buf[24];
  std::snprintf(buf, sizeof buf, "req-%016llx",
                static_cast<unsigned long long>(hash_combine(request_nonce_, ++request_counter_)));
  return buf;
}

void TriageService::expire_requests(std::int64_t now) {
  while (!request_order_.empty()) {
    auto it = requests_.find(request_order_.front());
    const bool stale = it == requests_.end() || now - it->second.issued_at > config_.request_retention_seconds ||
                       requests_.size() > config_.max_retained_requests;
    if (!stale) break;
    if (it != requests_.end()) requests_.erase(it);
    request_order_.pop_front();
  }
}

void TriageService::remember(const std::string& request_id, const ensemble::Recommendation& rec,
                             const corpus::Incident& incident) {
  RequestRecord record;
  for (const auto& t : rec.teams) record.shown_teams.push_back(t.team);
  record.incident = incident;
  record.issued_at = unix_now();
  std::lock_guard lock(requests_mu_);
  requests_[request_id] = std::move(record);
  request_order_.push_back(request_id);
  expire_requests(unix_now());
}

std::optional<TriageService::RequestRecord> TriageService::lookup(const std::string& request_id) const {
  std::lock_guard lock(requests_mu_);
  const auto it = requests_.find(request_id);
  if (it == requests_.end() || unix_now() - it->second.issued_at > config_.request_retention_seconds) {
    return std::nullopt;
  }
  return it->second;
}

ensemble::Recommendation TriageService::recommend(const std::string& incident_id) {
  const auto* incident = store_.find(incident_id);
  if (!incident) throw NotFoundError("unknown incident " + incident_id);
  auto rec = run(*incident);
  rec.request_id = next_request_id();
  remember(rec.request_id, rec, *incident);
  return rec;
}

ensemble::Recommendation TriageService::recommend_draft(corpus::Incident draft) {
  if (blank(draft.title)) throw ValidationError("title must not be empty");
  if (draft.id.empty()) draft.id = "draft";
  auto rec = run(draft);
  rec.request_id = next_request_id();
  remember(rec.request_id, rec, draft);
  return rec;
}

Insights TriageService::insights(const std::string& request_id, const std::string& team) const {
  const auto record = lookup(request_id);
  if (!record) throw NotFoundError("unknown or expired request " + request_id);
  return insights_for(record->incident, team);
}

Insights TriageService::insights_for(const corpus::Incident& incident, const std::string& team) const {
  const auto dep = deployment();
  const auto& system = *dep->system;
  Insights out;
  out.team = team;
  const auto query = textprep::prepare_tokens(incident, system.stoplist());
  std::set<std::string> oces;
  textprep::TokenStream evidence;
  for (const auto& n : system.similar_incidents().neighbors(query, system.config().lsh.neighbors)) {
    if (n.team != team) continue;
    ++out.similar_count;
    const auto* similar = system.training_corpus().find(n.id);
    if (!similar) continue;
    if (!similar->mitigating_oce.empty()) oces.insert(similar->mitigating_oce);
    const auto tokens = textprep::prepare_tokens(*similar, system.stoplist());
    evidence.sentences.insert(evidence.sentences.end(), tokens.sentences.begin(), tokens.sentences.end());
  }
  out.unique_oces = oces.size();
  for (const auto& phrase :
       textprep::extract_key_phrases(evidence, system.inverted_index().idf_table(), kMaxInsightKeywords)) {
    out.keywords.push_back(textprep::join_phrase(phrase));
  }
  return out;
}

FeedbackRecord TriageService::record_feedback(const std::string& request_id, const std::string& chosen_team,
                                              bool accepted) {
  if (blank(chosen_team)) throw ValidationError("chosen_team must not be empty");
  FeedbackRecord record;
  {
    std::lock_guard lock(requests_mu_);
    const auto it = requests_.find(request_id);
    if (it == requests_.end() || unix_now() - it->second.issued_at > config_.request_retention_seconds) {
      throw NotFoundError("unknown or expired request " + request_id);
    }
    if (it->second.has_feedback) throw ConflictError("feedback already recorded for " + request_id);
    it->second.has_feedback = true;
    record.shown_teams = it->second.shown_teams;
  }
  record.request_id = request_id;
  record.chosen_team = chosen_team;
  record.off_list =
      std::find(record.shown_teams.begin(), record.shown_teams.end(), chosen_team) == record.shown_teams.end();
  record.accepted = accepted && !record.off_list;
  record.timestamp = unix_now();
  append_log("feedback.jsonl", record.to_json());
  return record;
}

RoutingOutcome TriageService::route(const std::string& team_id, const corpus::Incident& incident) {
  if (!safe_team_id(team_id)) throw ValidationError("invalid team id '" + team_id + "'");
  ensemble::RuleSet rules;
  const auto path = config_.rules_dir / (team_id + ".json");
  if (!fs::exists(path)) {
    spdlog::warn("no rules file for team {}; routing on ML only", team_id);
  } else {
    try {
      rules = ensemble::RuleSet::load(path);
    } catch (const Error& e) {
      spdlog::warn("ignoring rules of team {}: {}", team_id, e.what());
    }
  }

  ensemble::Recommendation rec;
  bool models_down = false;
  try {
    rec = run(incident);
    rec.request_id = next_request_id();
    remember(rec.request_id, rec, incident);
  } catch (const UnavailableError&) {
    models_down = true;
  }

  RoutingOutcome out;
  out.request_id = rec.request_id;
  try {
    const auto decision = ensemble::apply_rules(rules, incident, rec);
    out.team = decision.team;
    out.provenance = decision.provenance;
    out.rule_id = decision.rule_id;
  } catch (const UnavailableError&) {
    if (models_down) throw UnavailableError("no rule matched and no model responded");
    out.provenance = "none";
  }

  auto line = out.to_json();
  line["listening_team"] = team_id;
  line["incident_id"] = incident.id;
  line["timestamp"] = unix_now();
  append_log("routing.jsonl", line);
  return out;
}

RetrainResult TriageService::retrain(const fs::path& corpus_path, const PipelineConfig& config) {
  std::unique_lock lock(retrain_mu_, std::try_to_lock);
  if (!lock.owns_lock()) throw ConflictError("a retrain is already running");
  if (!fs::is_regular_file(corpus_path)) throw NotFoundError("corpus file " + corpus_path.string() + " not found");
  auto loaded = corpus::load_corpus(corpus_path);
  if (!loaded.rejects.empty()) {
    spdlog::warn("{} invalid records skipped in {}", loaded.rejects.size(), corpus_path.string());
  }
  ArtifactStore artifacts(config_.artifact_root);
  auto result = service::retrain(artifacts, loaded.corpus, config);
  if (result.promoted) deploy(artifacts.load_current(), result.version);
  return result;
}

void TriageService::set_model_failed(const std::string& model_id, bool failed) {
  deployment()->registry->set_failed(model_id, failed);
}

Health TriageService::health() const {
  const auto dep = deployment();
  Health h;
  h.manifest_version = dep->version;
  for (const auto& e : dep->registry->entries()) {
    ++h.models_total;
    if (e.enabled) ++h.models_enabled;
    if (e.enabled && e.failed) ++h.models_failed;
  }
  if (h.models_enabled == 0 || h.models_failed == h.models_enabled) {
    h.status = "down";
  } else {
    h.status = h.models_failed == 0 ? "ok" : "degraded";
  }
  return h;
}

std::vector<RegistryEntry> TriageService::models() const { return deployment()->registry->entries(); }

PipelineConfig TriageService::serving_config() const { return deployment()->system->config(); }

const corpus::Incident* TriageService::find_incident(const std::string& id) const { return store_.find(id); }

void TriageService::append_log(const std::string& file, const ordered_json& line) {
  std::lock_guard lock(log_mu_);
  fs::create_directories(config_.log_dir);
  std::ofstream out(config_.log_dir / file, std::ios::app);
  if (!out) throw IoError("cannot append to " + (config_.log_dir / file).string());
  out << line.dump() << '\n';
}

}  // namespace triage::service
