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

#include "triage/ensemble/merge.hpp"

#include <algorithm>

#include "triage/common/error.hpp"

namespace triage::ensemble {

namespace {

struct Best {
  double confidence = -1.0;
  std::vector<std::string> models;
};

std::map<std::string, Best> max_per_team(std::span<const ModelOutput> outputs,
                                         const std::map<std::string, double>& weights) {
  std::map<std::string, Best> best;
  for (const auto& out : outputs) {
    double w = 1.0;
    if (auto it = weights.find(out.model_id); it != weights.end()) w = it->second;
    for (const auto& ts : out.top) {
      const double c = std::clamp(ts.confidence * w, 0.0, 1.0);
      auto& b = best[ts.team];
      if (c > b.confidence) {
        b.confidence = c;
        b.models = {out.model_id};
      } else if (c == b.confidence) {
        b.models.push_back(out.model_id);
      }
    }
  }
  for (auto& [team, b] : best) {
    std::sort(b.models.begin(), b.models.end());
    b.models.erase(std::unique(b.models.begin(), b.models.end()), b.models.end());
  }
  return best;
}

}  // namespace

Recommendation merge_outputs(std::span<const ModelOutput> outputs, const MergeOptions& options) {
  if (outputs.empty()) throw UnavailableError("no model produced an output");
  Recommendation rec;
  for (auto& [team, b] : max_per_team(outputs, options.weights)) {
    rec.teams.push_back({team, b.confidence, std::move(b.models)});
  }
  std::sort(rec.teams.begin(), rec.teams.end(), [](const RecommendedTeam& a, const RecommendedTeam& b) {
    return ranks_before({a.team, a.confidence}, {b.team, b.confidence});
  });
  if (rec.teams.size() > options.n) rec.teams.resize(options.n);
  rec.models_responded = outputs.size();
  rec.models_total = outputs.size();
  return rec;
}

ModelOutput merge_family(std::span<const ModelOutput> outputs, const std::string& family_id) {
  std::map<std::string, double> scores;
  for (const auto& [team, b] : max_per_team(outputs, {})) scores[team] = b.confidence;
  return make_model_output(family_id, std::move(scores));
}

}  // namespace triage::ensemble
