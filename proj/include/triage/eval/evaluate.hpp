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

#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "triage/common/model_output.hpp"
#include "triage/corpus/corpus.hpp"
#include "triage/eval/metrics.hpp"

namespace triage::eval {

/// Model family ids in ablation iteration order.
inline const std::vector<std::string> kFamilies{"mart", "cri", "idx", "si", "dnn"};
inline constexpr std::size_t kMaxN = 5;

struct ScenarioSlice {
  std::string name;
  std::function<bool(const corpus::Incident&)> contains;
};

/// All, Sev0-2, Min2Hop, CRI, Sev0-2@CoreServices, CRI(Sev0-2)@CoreServices.
std::vector<ScenarioSlice> standard_slices(const std::set<std::string>& core_services);
/// Incidents whose (pre-merge) team has at most `max_train_incidents`
/// incidents in `train`, unseen teams included.
ScenarioSlice cold_start_slice(const corpus::Corpus& train, std::size_t max_train_incidents = 5);

/// One output per model family, tagged with the family id.
using FamilyPredictor = std::function<std::vector<ModelOutput>(const corpus::Incident&)>;
/// Family outputs per test incident, in test order.
using PredictionSet = std::vector<std::vector<ModelOutput>>;

struct EvalOptions {
  /// Teams folded into Other in training; an Other prediction counts as a
  /// hit for them in the with-Other metrics.
  std::set<std::string> other_members;
  /// Worker threads for the prediction pass; 0 picks the hardware concurrency.
  std::size_t threads = 0;
};

struct SliceReport {
  std::string name;
  std::size_t count = 0;
  std::vector<Metrics> at_n;             // N = 1..kMaxN; empty for an empty slice
  std::vector<Metrics> at_n_with_other;  // same, Other credited
  std::map<std::string, std::size_t> reroutes;  // "0", "1", "2+"
  bool absent() const { return at_n.empty(); }
};

struct AblationRow {
  std::string families;  // e.g. "mart+cri"
  std::vector<SliceReport> slices;
};

struct EvalReport {
  std::size_t incidents = 0;
  std::vector<SliceReport> slices;
  std::vector<AblationRow> ablation;

  /// Nullptr when no slice has that name.
  const SliceReport* slice(std::string_view name) const;
  nlohmann::ordered_json to_json() const;
  /// Aligned plain-text table, one row per (families, slice).
  std::string to_table() const;
};

/// "all" or '+'-joined family ids. Throws ValidationError for an empty or
/// unknown family.
std::vector<std::string> parse_family_subset(std::string_view text);

/// Runs the predictor once per incident, in parallel.
PredictionSet predict_all(const FamilyPredictor& predictor, const corpus::Corpus& test, std::size_t threads = 0);

/// Slice metrics for the ensemble of the given families over precomputed
/// predictions. Throws ValidationError when the test set is empty or no
/// slice is named All.
std::vector<SliceReport> score_slices(const PredictionSet& predictions, const corpus::Corpus& test,
                                      std::span<const ScenarioSlice> slices, std::span<const std::string> families,
                                      const EvalOptions& options = {});

/// Full-ensemble report over every family.
EvalReport evaluate_scenarios(const FamilyPredictor& predictor, const corpus::Corpus& test,
                              std::span<const ScenarioSlice> slices, const EvalOptions& options = {});

/// One row per family subset, in the order given, from a single prediction
/// pass.
std::vector<AblationRow> ablation(const FamilyPredictor& predictor, const corpus::Corpus& test,
                                  std::span<const ScenarioSlice> slices,
                                  std::span<const std::vector<std::string>> subsets, const EvalOptions& options = {});
std::vector<AblationRow> ablation(const PredictionSet& predictions, const corpus::Corpus& test,
                                  std::span<const ScenarioSlice> slices,
                                  std::span<const std::vector<std::string>> subsets, const EvalOptions& options = {});

/// mart, mart+cri, mart+cri+idx, mart+cri+idx+si, all.
std::vector<std::vector<std::string>> iteration_subsets();

}  // namespace triage::eval
