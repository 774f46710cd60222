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
#include <string>
#include <vector>

#include <json.hpp>

namespace triage::corpus {

enum class IncidentType { kLsi, kCri };
enum class IncidentStatus { kActive, kMitigated, kResolved };

/// One incident report. `owning_team` is the label: the first team that
/// mitigated the incident.
struct Incident {
  std::string id;
  std::int64_t created_at = 0;  // UTC seconds
  int severity = 4;             // 0 (highest impact) .. 4
  IncidentType incident_type = IncidentType::kLsi;
  std::string title;
  std::string summary;
  std::vector<std::string> discussion;
  std::string source_name;
  std::string originating_service_id;
  std::string occurring_device_name;
  std::string raising_dc;
  std::vector<std::string> keywords;
  std::vector<std::string> routing_path;
  std::string owning_team;
  std::string mitigating_oce;
  IncidentStatus status = IncidentStatus::kResolved;

  int reroute_count() const {
    return routing_path.empty() ? 0 : static_cast<int>(routing_path.size()) - 1;
  }
  bool is_cri() const { return incident_type == IncidentType::kCri; }
  bool is_high_severity() const { return severity <= 2; }
  /// Sev0-2 or customer reported.
  bool is_high_impact() const { return is_high_severity() || is_cri(); }

  friend bool operator==(const Incident&, const Incident&) = default;
};

const char* to_string(IncidentType t);
const char* to_string(IncidentStatus s);

/// Field order is fixed so serialized corpora are byte-stable.
nlohmann::ordered_json to_json(const Incident& incident);

/// Parses one record. Unknown fields are ignored. Throws ValidationError
/// naming the first violated rule.
Incident incident_from_json(const nlohmann::json& j);

/// Checks the record-level invariants; returns an empty string when valid,
/// otherwise the reason.
std::string validate(const Incident& incident);

}  // namespace triage::corpus
