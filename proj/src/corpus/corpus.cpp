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

#include "triage/corpus/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "triage/common/error.hpp"
#include "triage/common/files.hpp"

namespace triage::corpus {

Corpus::Corpus(std::vector<Incident> incidents, std::map<std::string, std::string> original_teams)
    : incidents_(std::move(incidents)), original_teams_(std::move(original_teams)) {
  by_id_.reserve(incidents_.size());
  for (std::size_t i = 0; i < incidents_.size(); ++i) {
    const auto& inc = incidents_[i];
    if (!by_id_.emplace(inc.id, i).second) throw ValidationError("duplicate incident id " + inc.id);
    team_index_[inc.owning_team].push_back(inc.id);
  }
}

const std::string& Corpus::original_team(const Incident& incident) const {
  auto it = original_teams_.find(incident.id);
  return it == original_teams_.end() ? incident.owning_team : it->second;
}

const Incident* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &incidents_[it->second];
}

std::vector<std::string> Corpus::teams() const {
  std::vector<std::string> out;
  out.reserve(team_index_.size());
  for (const auto& [team, _] : team_index_) out.push_back(team);
  return out;
}

std::map<std::string, std::size_t> Corpus::team_counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& [team, ids] : team_index_) out[team] = ids.size();
  return out;
}

std::pair<std::int64_t, std::int64_t> Corpus::time_range() const {
  if (incidents_.empty()) throw ValidationError("time_range of an empty corpus");
  auto [lo, hi] = std::minmax_element(
      incidents_.begin(), incidents_.end(),
      [](const Incident& a, const Incident& b) { return a.created_at < b.created_at; });
  return {lo->created_at, hi->created_at};
}

LoadResult parse_corpus(std::istream& in) {
  LoadResult result;
  std::vector<Incident> incidents;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto inc = incident_from_json(nlohmann::json::parse(line));
      if (seen.count(inc.id)) {
        result.rejects.push_back({line_no, "duplicate id " + inc.id});
        continue;
      }
      seen.emplace(inc.id, incidents.size());
      incidents.push_back(std::move(inc));
    } catch (const nlohmann::json::exception& e) {
      result.rejects.push_back({line_no, std::string("malformed record: ") + e.what()});
    } catch (const ValidationError& e) {
      result.rejects.push_back({line_no, e.what()});
    }
  }
  result.corpus = Corpus(std::move(incidents));
  if (!result.rejects.empty()) {
    spdlog::warn("corpus: {} record(s) rejected", result.rejects.size());
  }
  return result;
}

LoadResult load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus " + path.string());
  return parse_corpus(in);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& inc : corpus.incidents()) {
    out += to_json(inc).dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_corpus(corpus));
}

void write_rejects(const std::vector<Reject>& rejects, const std::filesystem::path& path) {
  std::ostringstream ss;
  ss << "line\treason\n";
  for (const auto& r : rejects) ss << r.line << '\t' << r.reason << '\n';
  write_file_atomic(path, ss.str());
}

Corpus merge_infrequent_teams(const Corpus& corpus, std::size_t min_count) {
  if (min_count == 0) throw ConfigError("min_count must be >= 1");
  const auto counts = corpus.team_counts();
  std::vector<Incident> out;
  out.reserve(corpus.size());
  auto originals = corpus.original_teams();
  for (const auto& inc : corpus.incidents()) {
    Incident copy = inc;
    if (inc.owning_team != kOtherTeam && counts.at(inc.owning_team) < min_count) {
      originals.emplace(inc.id, inc.owning_team);
      copy.owning_team = std::string(kOtherTeam);
    }
    out.push_back(std::move(copy));
  }
  return Corpus(std::move(out), std::move(originals));
}

SplitResult split_train_test(const Corpus& corpus, std::int64_t cutoff) {
  SplitResult result;
  result.train = corpus.filter([&](const Incident& i) { return i.created_at < cutoff; });
  result.test = corpus.filter([&](const Incident& i) { return i.created_at >= cutoff; });
  if (!corpus.empty() && (result.train.empty() || result.test.empty())) {
    result.warning = "cutoff " + std::to_string(cutoff) + " lies outside the corpus time range; " +
                     (result.train.empty() ? "train" : "test") + " split is empty";
    spdlog::warn("split: {}", *result.warning);
  }
  return result;
}

std::int64_t trailing_cutoff(const Corpus& corpus, double days) {
  const auto [lo, hi] = corpus.time_range();
  (void)lo;
  return hi - static_cast<std::int64_t>(days * 86400.0);
}

}  // namespace triage::corpus
