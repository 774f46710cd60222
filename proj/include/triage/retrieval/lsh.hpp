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
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "triage/common/archive.hpp"
#include "triage/common/model_output.hpp"
#include "triage/retrieval/document.hpp"

namespace triage::retrieval {

/// Sorted, de-duplicated unigrams and within-sentence bigrams ("a b").
std::vector<std::string> shingles(const textprep::TokenStream& tokens);

/// |a ∩ b| / |a ∪ b| of two sorted sets; 0 when both are empty.
double jaccard(std::span<const std::string> a, std::span<const std::string> b);

struct LshOptions {
  std::size_t num_hashes = 128;
  std::size_t bands = 32;
  std::size_t shards = 10;
  std::size_t neighbors = 25;
  std::uint64_t seed = 0x51ed;

  std::size_t rows_per_band() const { return bands ? num_hashes / bands : 0; }
  void validate() const;
};

struct Neighbor {
  std::string id;
  std::string team;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Minhash signature, one minimum per hash function.
using Signature = std::vector<std::uint64_t>;

class MinHasher {
 public:
  MinHasher(std::size_t num_hashes, std::uint64_t seed);
  Signature sign(std::span<const std::string> shingle_set) const;
  std::size_t size() const { return salts_.size(); }

 private:
  std::vector<std::uint64_t> salts_;
};

/// Fraction of positions where two signatures agree.
double estimated_jaccard(const Signature& a, const Signature& b);

/// Banded minhash index split into shards searched in parallel.
class LshIndex {
 public:
  inline static const std::string kModelId = "si";

  /// Documents with no shingles are skipped with a warning.
  static LshIndex build(std::span<const Document> documents, const LshOptions& options = {});

  /// Candidates sharing at least one band bucket, ranked by estimated
  /// Jaccard descending then id; at most k.
  std::vector<Neighbor> neighbors(const textprep::TokenStream& query, std::size_t k) const;
  /// Max estimated Jaccard per team over the top `options().neighbors`.
  ModelOutput predict(const textprep::TokenStream& query) const;

  const LshOptions& options() const { return options_; }
  std::size_t size() const { return ids_.size(); }
  const Signature& signature(std::size_t i) const { return signatures_[i]; }
  const std::string& id(std::size_t i) const { return ids_[i]; }

  /// Band bucket maps are not stored; load rebuilds them from signatures.
  void save(Archive& archive) const;
  static LshIndex load(const Archive& archive);

 private:
  void index_all();
  std::uint64_t band_key(const Signature& sig, std::size_t band) const;

  LshOptions options_;
  MinHasher hasher_{1, 0};
  std::vector<std::string> ids_;
  std::vector<std::string> teams_;
  std::vector<Signature> signatures_;
  // shard -> band key -> document positions (ascending).
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>> shards_;
};

/// Exact Jaccard over shingles against every document; descending, ties by id.
std::vector<Neighbor> brute_force_neighbors(std::span<const Document> documents,
                                            const textprep::TokenStream& query, std::size_t k);

}  // namespace triage::retrieval
