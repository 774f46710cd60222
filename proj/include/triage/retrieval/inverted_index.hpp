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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "triage/common/archive.hpp"
#include "triage/common/model_output.hpp"
#include "triage/retrieval/document.hpp"

namespace triage::retrieval {

struct InvertedIndexOptions {
  double alpha = 0.2;
  std::size_t local_size = 200;
  std::size_t global_size = 500;
};

/// ln((T + 1) / (df + 1)) + 1 for a token found in `df` of `T` team documents.
double team_idf(std::size_t num_teams, std::size_t df);

/// Per-team word tables scored by IDF overlap with the query token set.
class InvertedIndex {
 public:
  static constexpr double kEpsilon = 1e-12;
  inline static const std::string kModelId = "idx";

  /// Throws ValidationError on an empty corpus, ConfigError when alpha is
  /// outside [0,1]. Teams without text get empty tables.
  static InvertedIndex build(std::span<const Document> documents, const InvertedIndexOptions& options = {});

  /// Blended confidences for the set of query tokens; empty query abstains.
  ModelOutput predict(const textprep::TokenStream& query) const;
  ModelOutput predict_set(const std::vector<std::string>& query_set) const;

  /// Fraction of the query's IDF mass covered by a team table.
  double local_score(const std::string& team, const std::vector<std::string>& query_set) const;
  double global_score(const std::string& team, const std::vector<std::string>& query_set) const;

  double idf(const std::string& token) const;
  const std::unordered_map<std::string, double>& idf_table() const { return idf_; }
  double alpha() const { return alpha_; }
  std::vector<std::string> teams() const;
  /// token -> weight (tf*idf for local, idf for global).
  const std::map<std::string, double>& local_table(const std::string& team) const;
  const std::map<std::string, double>& global_table(const std::string& team) const;

  void save(Archive& archive) const;
  static InvertedIndex load(const Archive& archive);

 private:
  double table_score(const std::map<std::string, std::map<std::string, double>>& tables, const std::string& team,
                     const std::vector<std::string>& query_set) const;

  double alpha_ = 0.2;
  std::unordered_map<std::string, double> idf_;
  std::map<std::string, std::map<std::string, double>> local_;
  std::map<std::string, std::map<std::string, double>> global_;
};

}  // namespace triage::retrieval
