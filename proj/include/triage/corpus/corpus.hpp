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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "triage/corpus/incident.hpp"

namespace triage::corpus {

/// Reserved label for merged rare classes. Rejected in ingested data.
inline constexpr std::string_view kOtherTeam = "__Other__";

/// Immutable collection of incidents with a team index.
class Corpus {
 public:
  Corpus() = default;
  /// `original_teams` maps incident id -> pre-merge label for incidents that
  /// were relabeled to the Other class.
  explicit Corpus(std::vector<Incident> incidents,
                  std::map<std::string, std::string> original_teams = {});

  const std::vector<Incident>& incidents() const { return incidents_; }
  const std::map<std::string, std::vector<std::string>>& team_index() const { return team_index_; }
  std::string_view other_team_id() const { return kOtherTeam; }
  const std::map<std::string, std::string>& original_teams() const { return original_teams_; }

  /// Label before any Other merge.
  const std::string& original_team(const Incident& incident) const;
  const Incident* find(std::string_view id) const;

  std::size_t size() const { return incidents_.size(); }
  bool empty() const { return incidents_.empty(); }
  std::vector<std::string> teams() const;
  std::map<std::string, std::size_t> team_counts() const;
  /// [earliest, latest] created_at. Requires a non-empty corpus.
  std::pair<std::int64_t, std::int64_t> time_range() const;

  /// Returns the subset of incidents satisfying `keep`, preserving side maps.
  template <typename Pred>
  Corpus filter(Pred keep) const {
    std::vector<Incident> out;
    std::map<std::string, std::string> originals;
    for (const auto& inc : incidents_) {
      if (!keep(inc)) continue;
      if (auto it = original_teams_.find(inc.id); it != original_teams_.end()) originals.insert(*it);
      out.push_back(inc);
    }
    return Corpus(std::move(out), std::move(originals));
  }

 private:
  std::vector<Incident> incidents_;
  std::map<std::string, std::vector<std::string>> team_index_;
  std::map<std::string, std::string> original_teams_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct Reject {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct LoadResult {
  Corpus corpus;
  std::vector<Reject> rejects;
};

/// Reads one JSON object per line. Invalid records are collected into
/// `rejects`; blank lines are skipped. Throws IoError when unreadable.
LoadResult load_corpus(const std::filesystem::path& path);
LoadResult parse_corpus(std::istream& in);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);
/// Tab-separated (line, reason) rows.
void write_rejects(const std::vector<Reject>& rejects, const std::filesystem::path& path);

/// Relabels every team with fewer than `min_count` incidents to the Other
/// class. Idempotent; min_count == 1 is the identity.
Corpus merge_infrequent_teams(const Corpus& corpus, std::size_t min_count);

struct SplitResult {
  Corpus train;  // created_at < cutoff
  Corpus test;   // created_at >= cutoff
  std::optional<std::string> warning;
};

SplitResult split_train_test(const Corpus& corpus, std::int64_t cutoff);

/// Cutoff leaving the last `days` days of the corpus for testing.
std::int64_t trailing_cutoff(const Corpus& corpus, double days);

}  // namespace triage::corpus
