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

#include "triage/eval/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <sstream>
#include <thread>

#include "triage/common/error.hpp"
#include "triage/ensemble/merge.hpp"

namespace triage::eval {

namespace {

bool in_core(const corpus::Incident& inc, const std::set<std::string>& core) {
  return core.count(inc.originating_service_id) != 0;
}

std::string reroute_bucket(const corpus::Incident& inc) {
  const int hops = inc.reroute_count();
  if (hops >= 2) return "2+";
  return std::to_string(hops);
}

std::vector<std::string> ranked_teams(const std::vector<ModelOutput>& outputs, const std::set<std::string>& families) {
  std::vector<ModelOutput> selected;
  for (const auto& out : outputs) {
    if (families.count(out.model_id)) selected.push_back(out);
  }
  std::vector<std::string> teams;
  if (selected.empty()) return teams;
  for (const auto& t : ensemble::merge_outputs(selected).teams) teams.push_back(t.team);
  return teams;
}

nlohmann::ordered_json metrics_json(const std::vector<Metrics>& at_n) {
  if (at_n.empty()) return nullptr;
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < at_n.size(); ++i) {
    arr.push_back({{"n", i + 1}, {"precision", at_n[i].precision}, {"recall", at_n[i].recall}, {"f1", at_n[i].f1}});
  }
  return arr;
}

nlohmann::ordered_json slice_json(const SliceReport& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["count"] = s.count;
  j["metrics"] = metrics_json(s.at_n);
  j["metrics_with_other"] = metrics_json(s.at_n_with_other);
  j["reroute_distribution"] = s.reroutes;
  return j;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

std::vector<ScenarioSlice> standard_slices(const std::set<std::string>& core_services) {
  return {
      {"All", [](const corpus::Incident&) { return true; }},
      {"Sev0-2", [](const corpus::Incident& inc) { return inc.is_high_severity(); }},
      {"Min2Hop", [](const corpus::Incident& inc) { return inc.reroute_count() >= 2; }},
      {"CRI", [](const corpus::Incident& inc) { return inc.is_cri(); }},
      {"Sev0-2@CoreServices",
       [core_services](const corpus::Incident& inc) { return inc.is_high_severity() && in_core(inc, core_services); }},
      {"CRI(Sev0-2)@CoreServices",
       [core_services](const corpus::Incident& inc) {
         return inc.is_cri() && inc.is_high_severity() && in_core(inc, core_services);
       }},
  };
}

ScenarioSlice cold_start_slice(const corpus::Corpus& train, std::size_t max_train_incidents) {
  std::map<std::string, std::size_t> counts;
  for (const auto& inc : train.incidents()) ++counts[train.original_team(inc)];
  return {"ColdStart", [counts = std::move(counts), max_train_incidents](const corpus::Incident& inc) {
            const auto it = counts.find(inc.owning_team);
            return it == counts.end() || it->second <= max_train_incidents;
          }};
}

std::vector<std::string> parse_family_subset(std::string_view text) {
  if (text == "all") return kFamilies;
  std::vector<std::string> out;
  std::string part;
  std::istringstream in{std::string(text)};
  while (std::getline(in, part, '+')) {
    if (std::find(kFamilies.begin(), kFamilies.end(), part) == kFamilies.end()) {
      throw ValidationError("unknown model family '" + part + "'");
    }
    if (std::find(out.begin(), out.end(), part) == out.end()) out.push_back(part);
  }
  if (out.empty()) throw ValidationError("empty model family subset");
  return out;
}

std::vector<std::vector<std::string>> iteration_subsets() {
  std::vector<std::vector<std::string>> out;
  for (std::size_t k = 1; k <= kFamilies.size(); ++k) out.emplace_back(kFamilies.begin(), kFamilies.begin() + k);
  return out;
}

PredictionSet predict_all(const FamilyPredictor& predictor, const corpus::Corpus& test, std::size_t threads) {
  const auto& incidents = test.incidents();
  PredictionSet out(incidents.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, incidents.size()));
  std::vector<std::future<void>> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < incidents.size(); i += threads) out[i] = predictor(incidents[i]);
    }));
  }
  for (auto& f : workers) f.get();
  return out;
}

std::vector<SliceReport> score_slices(const PredictionSet& predictions, const corpus::Corpus& test,
                                      std::span<const ScenarioSlice> slices, std::span<const std::string> families,
                                      const EvalOptions& options) {
  if (test.empty()) throw ValidationError("empty test set");
  if (predictions.size() != test.size()) throw ValidationError("prediction count does not match the test set");
  if (std::none_of(slices.begin(), slices.end(), [](const ScenarioSlice& s) { return s.name == "All"; })) {
    throw ValidationError("slices must include All");
  }
  const std::set<std::string> family_set(families.begin(), families.end());
  const auto& incidents = test.incidents();

  std::vector<std::vector<std::string>> lists(incidents.size());
  for (std::size_t i = 0; i < incidents.size(); ++i) lists[i] = ranked_teams(predictions[i], family_set);

  std::vector<SliceReport> out;
  for (const auto& slice : slices) {
    SliceReport report;
    report.name = slice.name;
    report.reroutes = {{"0", 0}, {"1", 0}, {"2+", 0}};
    std::map<std::string, std::vector<std::string>> preds, preds_other;
    std::map<std::string, std::string> truth;
    for (std::size_t i = 0; i < incidents.size(); ++i) {
      const auto& inc = incidents[i];
      if (!slice.contains(inc)) continue;
      ++report.reroutes[reroute_bucket(inc)];
      const auto& team = test.original_team(inc);
      truth[inc.id] = team;
      preds[inc.id] = lists[i];
      auto credited = lists[i];
      if (options.other_members.count(team)) {
        std::replace(credited.begin(), credited.end(), std::string(corpus::kOtherTeam), team);
      }
      preds_other[inc.id] = std::move(credited);
    }
    report.count = truth.size();
    if (!truth.empty()) {
      for (std::size_t n = 1; n <= kMaxN; ++n) {
        report.at_n.push_back(metrics_at_n(preds, truth, n));
        report.at_n_with_other.push_back(metrics_at_n(preds_other, truth, n));
      }
    }
    out.push_back(std::move(report));
  }
  return out;
}

EvalReport evaluate_scenarios(const FamilyPredictor& predictor, const corpus::Corpus& test,
                              std::span<const ScenarioSlice> slices, const EvalOptions& options) {
  if (test.empty()) throw ValidationError("empty test set");
  EvalReport report;
  report.incidents = test.size();
  report.slices = score_slices(predict_all(predictor, test, options.threads), test, slices, kFamilies, options);
  return report;
}

std::vector<AblationRow> ablation(const PredictionSet& predictions, const corpus::Corpus& test,
                                  std::span<const ScenarioSlice> slices,
                                  std::span<const std::vector<std::string>> subsets, const EvalOptions& options) {
  std::vector<AblationRow> rows;
  for (const auto& subset : subsets) {
    if (subset.empty()) throw ValidationError("empty model family subset");
    rows.push_back({subset.size() == kFamilies.size() ? "all" : join(subset, '+'),
                    score_slices(predictions, test, slices, subset, options)});
  }
  return rows;
}

std::vector<AblationRow> ablation(const FamilyPredictor& predictor, const corpus::Corpus& test,
                                  std::span<const ScenarioSlice> slices,
                                  std::span<const std::vector<std::string>> subsets, const EvalOptions& options) {
  if (test.empty()) throw ValidationError("empty test set");
  return ablation(predict_all(predictor, test, options.threads), test, slices, subsets, options);
}

const SliceReport* EvalReport::slice(std::string_view name) const {
  for (const auto& s : slices) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["incidents"] = incidents;
  j["slices"] = nlohmann::ordered_json::array();
  for (const auto& s : slices) j["slices"].push_back(slice_json(s));
  j["ablation"] = nlohmann::ordered_json::array();
  for (const auto& row : ablation) {
    nlohmann::ordered_json r;
    r["families"] = row.families;
    r["slices"] = nlohmann::ordered_json::array();
    for (const auto& s : row.slices) r["slices"].push_back(slice_json(s));
    j["ablation"].push_back(std::move(r));
  }
  return j;
}

std::string EvalReport::to_table() const {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"families", "slice", "count"};
  for (std::size_t n = 1; n <= kMaxN; ++n) {
    for (const char* m : {"P@", "R@", "F1@"}) header.push_back(m + std::to_string(n));
  }
  rows.push_back(header);
  auto add = [&rows](const std::string& families, const SliceReport& s) {
    std::vector<std::string> row{families, s.name, std::to_string(s.count)};
    for (std::size_t n = 0; n < kMaxN; ++n) {
      if (s.absent()) {
        row.insert(row.end(), {"-", "-", "-"});
      } else {
        row.insert(row.end(), {fixed4(s.at_n[n].precision), fixed4(s.at_n[n].recall), fixed4(s.at_n[n].f1)});
      }
    }
    rows.push_back(std::move(row));
  };
  for (const auto& s : slices) add("all", s);
  for (const auto& r : ablation) {
    for (const auto& s : r.slices) add(r.families, s);
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      const auto pad = std::string(widths[c] - row[c].size(), ' ');
      line += c < 2 ? row[c] + pad : pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace triage::eval
