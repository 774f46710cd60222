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

#include "triage/eval/metrics.hpp"

#include <algorithm>

#include "triage/common/error.hpp"

namespace triage::eval {

double f1_score(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Metrics metrics_at_n(const std::map<std::string, std::vector<std::string>>& predictions,
                     const std::map<std::string, std::string>& truth, std::size_t n) {
  if (truth.empty()) throw ValidationError("metrics need at least one incident");
  if (n == 0) throw ValidationError("n must be >= 1");
  if (predictions.size() != truth.size()) throw ValidationError("predictions and truth differ in size");

  std::size_t hits = 0;
  std::size_t emitted = 0;
  for (const auto& [id, team] : truth) {
    const auto it = predictions.find(id);
    if (it == predictions.end()) throw ValidationError("no prediction for incident " + id);
    const auto& list = it->second;
    const auto k = std::min(n, list.size());
    emitted += k;
    if (std::find(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(k), team) !=
        list.begin() + static_cast<std::ptrdiff_t>(k)) {
      ++hits;
    }
  }
  Metrics m;
  m.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
  m.precision = emitted == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(emitted);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

}  // namespace triage::eval
