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

#include "triage/retrieval/inverted_index.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "triage/common/error.hpp"

namespace triage::retrieval {

namespace {

using Table = std::map<std::string, double>;

// Highest `n` entries by score, ties by token.
std::vector<std::pair<std::string, double>> top_by(std::vector<std::pair<std::string, double>> items,
                                                   std::size_t n) {
  auto cmp = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  if (items.size() > n) {
    std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n), items.end(), cmp);
    items.resize(n);
  } else {
    std::sort(items.begin(), items.end(), cmp);
  }
  return items;
}

void put_tables(Archive& a, const std::string& prefix, const std::map<std::string, Table>& tables) {
  std::vector<std::string> teams, tokens;
  std::vector<std::uint64_t> sizes;
  std::vector<double> weights;
  for (const auto& [team, table] : tables) {
    teams.push_back(team);
    sizes.push_back(table.size());
    for (const auto& [tok, w] : table) {
      tokens.push_back(tok);
      weights.push_back(w);
    }
  }
  a.put(prefix + ".teams", std::move(teams));
  a.put(prefix + ".sizes", std::move(sizes));
  a.put(prefix + ".tokens", std::move(tokens));
  a.put(prefix + ".weights", std::move(weights));
}

std::map<std::string, Table> get_tables(const Archive& a, const std::string& prefix) {
  const auto teams = a.get_str(prefix + ".teams");
  const auto sizes = a.get_u64(prefix + ".sizes");
  const auto tokens = a.get_str(prefix + ".tokens");
  const auto weights = a.get_f64(prefix + ".weights");
  if (teams.size() != sizes.size() || tokens.size() != weights.size()) {
    throw ValidationError("inverted index archive: inconsistent " + prefix + " arrays");
  }
  std::map<std::string, Table> out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < teams.size(); ++i) {
    if (sizes[i] > tokens.size() - pos) throw ValidationError("inverted index archive: truncated " + prefix);
    auto& table = out[teams[i]];
    for (std::uint64_t j = 0; j < sizes[i]; ++j, ++pos) table.emplace(tokens[pos], weights[pos]);
  }
  if (pos != tokens.size()) throw ValidationError("inverted index archive: trailing " + prefix + " tokens");
  return out;
}

const Table kEmptyTable;

}  // namespace

double team_idf(std::size_t num_teams, std::size_t df) {
  return std::log(static_cast<double>(num_teams + 1) / static_cast<double>(df + 1)) + 1.0;
}

InvertedIndex InvertedIndex::build(std::span<const Document> documents, const InvertedIndexOptions& options) {
  if (!(options.alpha >= 0.0 && options.alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  if (documents.empty()) throw ValidationError("cannot build an inverted index from an empty corpus");

  std::map<std::string, std::map<std::string, std::size_t>> tf;
  for (const auto& doc : documents) {
    auto& counts = tf[doc.team];
    for (const auto& sentence : doc.tokens.sentences) {
      for (const auto& tok : sentence) ++counts[tok];
    }
  }

  InvertedIndex index;
  index.alpha_ = options.alpha;
  std::map<std::string, std::size_t> df;
  for (const auto& [team, counts] : tf) {
    for (const auto& [tok, n] : counts) ++df[tok];
  }
  for (const auto& [tok, d] : df) index.idf_.emplace(tok, team_idf(tf.size(), d));

  for (const auto& [team, counts] : tf) {
    auto& local = index.local_[team];
    auto& global = index.global_[team];
    if (counts.empty()) {
      spdlog::warn("inverted index: team {} has no text; empty tables", team);
      continue;
    }
    std::vector<std::pair<std::string, double>> by_tfidf, by_tf;
    for (const auto& [tok, n] : counts) {
      const double idf = index.idf_.at(tok);
      by_tfidf.emplace_back(tok, static_cast<double>(n) * idf);
      by_tf.emplace_back(tok, static_cast<double>(n));
    }
    for (auto& [tok, w] : top_by(std::move(by_tfidf), options.local_size)) local.emplace(tok, w);
    for (auto& [tok, n] : top_by(std::move(by_tf), options.global_size)) global.emplace(tok, index.idf_.at(tok));
  }
  return index;
}

double InvertedIndex::idf(const std::string& token) const {
  const auto it = idf_.find(token);
  return it == idf_.end() ? 0.0 : it->second;
}

std::vector<std::string> InvertedIndex::teams() const {
  std::vector<std::string> out;
  for (const auto& [team, table] : local_) out.push_back(team);
  return out;
}

const std::map<std::string, double>& InvertedIndex::local_table(const std::string& team) const {
  const auto it = local_.find(team);
  return it == local_.end() ? kEmptyTable : it->second;
}

const std::map<std::string, double>& InvertedIndex::global_table(const std::string& team) const {
  const auto it = global_.find(team);
  return it == global_.end() ? kEmptyTable : it->second;
}

double InvertedIndex::table_score(const std::map<std::string, Table>& tables, const std::string& team,
                                  const std::vector<std::string>& query_set) const {
  const auto it = tables.find(team);
  if (it == tables.end()) return 0.0;
  double mass = 0.0, hit = 0.0;
  for (const auto& tok : query_set) {
    const double w = idf(tok);
    mass += w;
    if (it->second.count(tok)) hit += w;
  }
  return hit / std::max(mass, kEpsilon);
}

double InvertedIndex::local_score(const std::string& team, const std::vector<std::string>& query_set) const {
  return table_score(local_, team, query_set);
}

double InvertedIndex::global_score(const std::string& team, const std::vector<std::string>& query_set) const {
  return table_score(global_, team, query_set);
}

ModelOutput InvertedIndex::predict(const textprep::TokenStream& query) const {
  return predict_set(textprep::token_set(query));
}

ModelOutput InvertedIndex::predict_set(const std::vector<std::string>& query_set) const {
  std::vector<std::string> q = query_set;
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());
  std::map<std::string, double> scores;
  if (q.empty()) return make_model_output(kModelId, {}, kTopN, true);
  for (const auto& [team, table] : local_) {
    const double conf = alpha_ * local_score(team, q) + (1.0 - alpha_) * global_score(team, q);
    scores[team] = std::clamp(conf, 0.0, 1.0);
  }
  return make_model_output(kModelId, std::move(scores), kTopN, true);
}

void InvertedIndex::save(Archive& a) const {
  a.put_scalar("idx.format", "1");
  a.put("idx.alpha", std::vector<double>{alpha_});
  std::map<std::string, double> ordered(idf_.begin(), idf_.end());
  std::vector<std::string> tokens;
  std::vector<double> values;
  for (const auto& [tok, v] : ordered) {
    tokens.push_back(tok);
    values.push_back(v);
  }
  a.put("idx.idf.tokens", std::move(tokens));
  a.put("idx.idf.values", std::move(values));
  put_tables(a, "idx.local", local_);
  put_tables(a, "idx.global", global_);
}

InvertedIndex InvertedIndex::load(const Archive& a) {
  if (a.get_scalar("idx.format") != "1") throw ValidationError("inverted index archive: unsupported format");
  InvertedIndex index;
  const auto alpha = a.get_f64("idx.alpha");
  if (alpha.size() != 1 || !(alpha[0] >= 0.0 && alpha[0] <= 1.0)) {
    throw ValidationError("inverted index archive: bad alpha");
  }
  index.alpha_ = alpha[0];
  const auto tokens = a.get_str("idx.idf.tokens");
  const auto values = a.get_f64("idx.idf.values");
  if (tokens.size() != values.size()) throw ValidationError("inverted index archive: idf arrays differ");
  for (std::size_t i = 0; i < tokens.size(); ++i) index.idf_.emplace(tokens[i], values[i]);
  index.local_ = get_tables(a, "idx.local");
  index.global_ = get_tables(a, "idx.global");
  return index;
}

}  // namespace triage::retrieval
