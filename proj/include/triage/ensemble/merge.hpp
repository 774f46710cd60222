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
#include <span>
#include <string>
#include <vector>

#include "triage/common/model_output.hpp"

namespace triage::ensemble {

struct RecommendedTeam {
  std::string team;
  double confidence = 0.0;
  std::vector<std::string> models;  // ids reaching the team's max, sorted

  friend bool operator==(const RecommendedTeam&, const RecommendedTeam&) = default;
};

struct Recommendation {
  std::vector<RecommendedTeam> teams;  // at most n, ranked
  std::string request_id;
  std::size_t models_responded = 0;
  std::size_t models_total = 0;

  bool empty() const { return teams.empty(); }
  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

struct MergeOptions {
  std::size_t n = kTopN;
  /// Per-model multiplier applied before the max (missing ids weigh 1.0).
  std::map<std::string, double> weights;
};

/// Max confidence per team over every output's top list, ranked and cut to
/// n. Throws UnavailableError when `outputs` is empty.
Recommendation merge_outputs(std::span<const ModelOutput> outputs, const MergeOptions& options = {});

/// The same max rule for the buckets of one family; `scores` keeps every
/// merged team and `top` the best kTopN.
ModelOutput merge_family(std::span<const ModelOutput> outputs, const std::string& family_id);

}  // namespace triage::ensemble
