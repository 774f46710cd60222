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

#include <map>
#include <string>
#include <vector>

namespace triage {

inline constexpr std::size_t kTopN = 5;

struct TeamScore {
  std::string team;
  double confidence = 0.0;

  friend bool operator==(const TeamScore&, const TeamScore&) = default;
};

/// Total order used for every ranked team list: confidence descending, then
/// team id ascending.
inline bool ranks_before(const TeamScore& a, const TeamScore& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return a.team < b.team;
}

/// One model's scored team list.
struct ModelOutput {
  std::string model_id;
  std::map<std::string, double> scores;  // team -> confidence in [0,1]
  std::vector<TeamScore> top;            // at most kTopN, ranked

  bool empty() const { return top.empty(); }
};

/// Builds a ModelOutput from raw scores: clamps to [0,1] and ranks the top-n.
/// With `drop_zero`, teams whose confidence is 0 never enter `top` (used by
/// the retrieval models, where zero overlap means abstention).
ModelOutput make_model_output(std::string model_id, std::map<std::string, double> scores,
                              std::size_t n = kTopN, bool drop_zero = false);

}  // namespace triage
