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

#include "triage/corpus/incident.hpp"

#include "triage/common/error.hpp"
#include "triage/corpus/corpus.hpp"

namespace triage::corpus {

using nlohmann::json;

const char* to_string(IncidentType t) { return t == IncidentType::kCri ? "CRI" : "LSI"; }

const char* to_string(IncidentStatus s) {
  switch (s) {
    case IncidentStatus::kActive: return "active";
    case IncidentStatus::kMitigated: return "mitigated";
    case IncidentStatus::kResolved: return "resolved";
  }
  return "resolved";
}

nlohmann::ordered_json to_json(const Incident& inc) {
  nlohmann::ordered_json j;
  j["id"] = inc.id;
  j["created_at"] = inc.created_at;
  j["severity"] = inc.severity;
  j["incident_type"] = to_string(inc.incident_type);
  j["title"] = inc.title;
  j["summary"] = inc.summary;
  j["discussion"] = inc.discussion;
  j["source_name"] = inc.source_name;
  j["originating_service_id"] = inc.originating_service_id;
  j["occurring_device_name"] = inc.occurring_device_name;
  j["raising_dc"] = inc.raising_dc;
  j["keywords"] = inc.keywords;
  j["routing_path"] = inc.routing_path;
  j["owning_team"] = inc.owning_team;
  j["mitigating_oce"] = inc.mitigating_oce;
  j["status"] = to_string(inc.status);
  return j;
}

namespace {

std::string opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::string> opt_strings(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_array()) throw ValidationError(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

Incident incident_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record is not an object");
  Incident inc;
  inc.id = opt_string(j, "id");
  if (inc.id.empty()) throw ValidationError("missing id");
  inc.title = opt_string(j, "title");
  if (inc.title.empty()) throw ValidationError("missing title");
  inc.owning_team = opt_string(j, "owning_team");
  if (inc.owning_team.empty()) throw ValidationError("missing owning_team");

  if (auto it = j.find("created_at"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ValidationError("created_at must be an integer");
    inc.created_at = it->get<std::int64_t>();
  }
  if (auto it = j.find("severity"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ValidationError("severity must be an integer");
    inc.severity = it->get<int>();
  }
  const auto type = opt_string(j, "incident_type");
  if (type.empty() || type == "LSI") {
    inc.incident_type = IncidentType::kLsi;
  } else if (type == "CRI") {
    inc.incident_type = IncidentType::kCri;
  } else {
    throw ValidationError("unknown incident_type '" + type + "'");
  }
  const auto status = opt_string(j, "status");
  if (status.empty() || status == "resolved") {
    inc.status = IncidentStatus::kResolved;
  } else if (status == "mitigated") {
    inc.status = IncidentStatus::kMitigated;
  } else if (status == "active") {
    inc.status = IncidentStatus::kActive;
  } else {
    throw ValidationError("unknown status '" + status + "'");
  }
  inc.summary = opt_string(j, "summary");
  inc.discussion = opt_strings(j, "discussion");
  inc.source_name = opt_string(j, "source_name");
  inc.originating_service_id = opt_string(j, "originating_service_id");
  inc.occurring_device_name = opt_string(j, "occurring_device_name");
  inc.raising_dc = opt_string(j, "raising_dc");
  inc.keywords = opt_strings(j, "keywords");
  inc.routing_path = opt_strings(j, "routing_path");
  inc.mitigating_oce = opt_string(j, "mitigating_oce");

  if (auto reason = validate(inc); !reason.empty()) throw ValidationError(reason);
  return inc;
}

std::string validate(const Incident& inc) {
  if (inc.id.empty()) return "missing id";
  if (inc.title.empty()) return "missing title";
  if (inc.owning_team.empty()) return "missing owning_team";
  if (inc.severity < 0 || inc.severity > 4) return "severity out of range 0-4";
  if (inc.owning_team == kOtherTeam) return "owning_team uses the reserved Other id";
  for (const auto& t : inc.routing_path) {
    if (t == kOtherTeam) return "routing_path uses the reserved Other id";
  }
  if (inc.status == IncidentStatus::kResolved && !inc.routing_path.empty() &&
      inc.routing_path.back() != inc.owning_team) {
    return "routing_path does not end at owning_team";
  }
  return {};
}

}  // namespace triage::corpus
