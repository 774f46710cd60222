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

namespace triage::eval {

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Harmonic mean; 0 when p + r = 0.
double f1_score(double precision, double recall);

/// hits = incidents whose true team is within the first min(n, |list|)
/// entries; recall = hits / |incidents|; precision = hits / sum of
/// min(n, |list|) (0 when nothing was emitted). Throws ValidationError for
/// an empty test set, mismatched keys or n == 0.
Metrics metrics_at_n(const std::map<std::string, std::vector<std::string>>& predictions,
                     const std::map<std::string, std::string>& truth, std::size_t n);

}  // namespace triage::eval
