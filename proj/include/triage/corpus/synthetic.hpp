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
#include <vector>

#include "triage/corpus/corpus.hpp"

namespace triage::corpus {

/// Parameters of the synthetic incident generator.
///
/// Every team owns a block of topical pseudo-words and a handful of
/// "scenarios" (recurring problems). An incident instantiates one scenario:
/// templated LSIs repeat the scenario title verbatim up to numbers and ids,
/// free-form LSIs and CRIs mutate the scenario text more heavily and mix in
/// background vocabulary.
struct GeneratorSpec {
  std::size_t num_teams = 20;
  std::size_t incidents_per_team = 200;
  /// Overrides incidents_per_team when non-empty (one entry per team).
  std::vector<std::size_t> per_team_counts{};
  std::size_t team_vocab_size = 40;
  /// Fraction of a team's topical words borrowed from other teams.
  double vocab_overlap = 0.05;
  std::size_t background_vocab_size = 120;
  std::size_t scenarios_per_team = 4;
  double cri_fraction = 0.15;
  double high_severity_fraction = 0.3;
  /// Fraction of each team's LSIs generated verbatim from a scenario title.
  double template_fraction = 0.3;
  /// Fraction of teams that only appear in the last `cold_start_window_days`.
  double cold_start_team_fraction = 0.0;
  std::size_t cold_start_incidents = 6;
  double cold_start_window_days = 6.0;
  /// Fraction of incidents with >= 2 reroutes, and with exactly one.
  double multi_hop_fraction = 0.12;
  double single_hop_fraction = 0.18;
  double span_days = 45.0;
  std::int64_t start_time = 1704067200;  // 2024-01-01T00:00:00Z
  std::size_t num_services = 10;
  std::size_t num_datacenters = 8;
};

/// Deterministic for a fixed (spec, seed). Throws ConfigError when fewer than
/// two teams are requested.
Corpus generate_synthetic(const GeneratorSpec& spec, std::uint64_t seed);

/// Team ids produced by the generator, in team order.
std::string synthetic_team_id(std::size_t team);

}  // namespace triage::corpus
