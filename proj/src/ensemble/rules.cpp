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

#include "triage/ensemble/rules.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "triage/common/error.hpp"
#include "triage/common/files.hpp"

namespace triage::ensemble {

namespace {

const std::set<std::string> kFields{"title",
                                    "summary",
                                    "discussion",
                                    "source_name",
                                    "originating_service_id",
                                    "occurring_device_name",
                                    "raising_dc",
                                    "severity",
                                    "incident_type",
                                    "keywords"};

std::vector<std::string> field_values(const corpus::Incident& inc, const std::string& field) {
  if (field == "title") return {inc.title};
  if (field == "summary") return {inc.summary};
  if (field == "discussion") return inc.discussion;
  if (field == "source_name") return {inc.source_name};
  if (field == "originating_service_id") return {inc.originating_service_id};
  if (field == "occurring_device_name") return {inc.occurring_device_name};
  if (field == "raising_dc") return {inc.raising_dc};
  if (field == "severity") return {std::to_string(inc.severity)};
  if (field == "incident_type") return {corpus::to_string(inc.incident_type)};
  if (field == "keywords") return inc.keywords;
  return {};
}

std::optional<RuleOperator> parse_op(const std::string& op) {
  if (op == "equals") return RuleOperator::kEquals;
  if (op == "contains") return RuleOperator::kContains;
  if (op == "regex") return RuleOperator::kRegex;
  return std::nullopt;
}

}  // namespace

RuleSet::RuleSet(std::vector<RoutingRule> rules) : rules_(std::move(rules)) {
  std::set<std::string> ids;
  std::set<int> priorities;
  for (const auto& r : rules_) {
    if (r.rule_id.empty()) throw ValidationError("routing rule without rule_id");
    if (r.target_team.empty()) throw ValidationError("routing rule " + r.rule_id + " has no target_team");
    if (!ids.insert(r.rule_id).second) throw ValidationError("duplicate rule_id " + r.rule_id);
    if (!priorities.insert(r.priority).second) {
      throw ValidationError("duplicate priority " + std::to_string(r.priority) + " (rule " + r.rule_id + ")");
    }
  }
  std::sort(rules_.begin(), rules_.end(),
            [](const RoutingRule& a, const RoutingRule& b) { return a.priority < b.priority; });
  compiled_.resize(rules_.size());
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    auto& rule = rules_[i];
    if (rule.conditions.empty() && rule.malformed.empty()) rule.malformed = "no conditions";
    for (const auto& c : rule.conditions) {
      if (!rule.malformed.empty()) break;
      if (!kFields.count(c.field)) {
        rule.malformed = "unknown field " + c.field;
        break;
      }
      std::regex re;
      if (c.op == RuleOperator::kRegex) {
        try {
          re = std::regex(c.value, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
          rule.malformed = "bad regex '" + c.value + "': " + e.what();
          break;
        }
      }
      compiled_[i].push_back(std::move(re));
    }
  }
}

RuleSet RuleSet::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("rules file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array()) {
    throw ValidationError("rules file must be an object with a \"rules\" array");
  }
  std::vector<RoutingRule> rules;
  for (const auto& j : doc["rules"]) {
    if (!j.is_object()) throw ValidationError("each rule must be an object");
    RoutingRule r;
    try {
      r.rule_id = j.at("rule_id").get<std::string>();
      r.target_team = j.at("target_team").get<std::string>();
      r.priority = j.at("priority").get<int>();
      const auto& when = j.at("when");
      if (!when.is_array()) throw ValidationError("rule " + r.rule_id + ": \"when\" must be an array");
      for (const auto& c : when) {
        RuleCondition cond;
        cond.field = c.at("field").get<std::string>();
        cond.value = c.at("value").get<std::string>();
        const auto op_name = c.at("op").get<std::string>();
        if (auto op = parse_op(op_name)) {
          cond.op = *op;
        } else if (r.malformed.empty()) {
          r.malformed = "unknown operator " + op_name;
        }
        r.conditions.push_back(std::move(cond));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("rule " + (r.rule_id.empty() ? std::string("<unnamed>") : r.rule_id) + ": " + e.what());
    }
    rules.push_back(std::move(r));
  }
  return RuleSet(std::move(rules));
}

RuleSet RuleSet::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

const RoutingRule* RuleSet::match(const corpus::Incident& incident) const {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    if (!rule.malformed.empty()) {
      spdlog::warn("routing rule {} skipped: {}", rule.rule_id, rule.malformed);
      continue;
    }
    bool all = true;
    for (std::size_t k = 0; k < rule.conditions.size() && all; ++k) {
      const auto& c = rule.conditions[k];
      const auto values = field_values(incident, c.field);
      all = std::any_of(values.begin(), values.end(), [&](const std::string& v) {
        switch (c.op) {
          case RuleOperator::kEquals:
            return v == c.value;
          case RuleOperator::kContains:
            return v.find(c.value) != std::string::npos;
          case RuleOperator::kRegex:
            return std::regex_search(v, compiled_[i][k]);
        }
        return false;
      });
    }
    if (all) return &rule;
  }
  return nullptr;
}

RoutingDecision apply_rules(const RuleSet& rules, const corpus::Incident& incident, const Recommendation& rec) {
  if (const auto* rule = rules.match(incident)) return {rule->target_team, "rule", rule->rule_id};
  if (rec.empty()) throw UnavailableError("no rule matched and the recommendation is empty");
  return {rec.teams.front().team, "ml", ""};
}

}  // namespace triage::ensemble
