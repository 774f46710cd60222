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

#include <filesystem>
#include <regex>
#include <string>
#include <vector>

#include "triage/corpus/incident.hpp"
#include "triage/ensemble/merge.hpp"

namespace triage::ensemble {

enum class RuleOperator { kEquals, kContains, kRegex };

struct RuleCondition {
  std::string field;
  RuleOperator op = RuleOperator::kEquals;
  std::string value;
};

struct RoutingRule {
  std::string rule_id;
  std::vector<RuleCondition> conditions;  // all must hold
  std::string target_team;
  int priority = 0;  // lower runs first
  /// Empty when the predicate is usable; otherwise why it is skipped.
  std::string malformed;
};

/// Ordered, validated rule set.
///
/// File format (JSON):
///   {"rules": [{"rule_id": "disk-full", "priority": 1, "target_team": "storage",
///               "when": [{"field": "title", "op": "contains", "value": "disk"}]}]}
/// Fields: title, summary, discussion, source_name, originating_service_id,
/// occurring_device_name, raising_dc, severity, incident_type, keywords.
/// Operators: equals, contains (case-sensitive substring), regex (search).
/// List fields match when any element matches.
class RuleSet {
 public:
  RuleSet() = default;
  /// Throws ValidationError on duplicate ids or priorities, or a missing
  /// id, team or condition list. Unknown fields or operators and bad regexes
  /// mark the rule malformed instead.
  explicit RuleSet(std::vector<RoutingRule> rules);

  static RuleSet from_json(const std::string& text);
  static RuleSet load(const std::filesystem::path& path);

  const std::vector<RoutingRule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }
  /// First matching well-formed rule in priority order.
  const RoutingRule* match(const corpus::Incident& incident) const;

 private:
  std::vector<RoutingRule> rules_;
  std::vector<std::vector<std::regex>> compiled_;  // per rule, one per condition (regex ops only)
};

struct RoutingDecision {
  std::string team;
  std::string provenance;  // "rule" or "ml"
  std::string rule_id;     // set for provenance "rule"

  friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

/// A matching rule wins; otherwise the recommendation's first team. Throws
/// UnavailableError when no rule matches and `rec` is empty.
RoutingDecision apply_rules(const RuleSet& rules, const corpus::Incident& incident, const Recommendation& rec);

}  // namespace triage::ensemble
