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

#include "triage/textprep/hashing.hpp"

#include <algorithm>
#include <bit>
#include <map>

#include "triage/common/error.hpp"
#include "triage/common/hash.hpp"

namespace triage::textprep {

namespace {

void validate_dim(std::uint64_t dim) {
  if (!std::has_single_bit(dim) || dim < (std::uint64_t{1} << 10) || dim > (std::uint64_t{1} << 32)) {
    throw ConfigError("hash dimension must be a power of two in [2^10, 2^32], got " + std::to_string(dim));
  }
}

void merge_counts(HashedFeatureVector& vec, const std::map<std::uint32_t, double>& counts) {
  std::map<std::uint32_t, double> merged(counts);
  for (const auto& e : vec.entries) merged[e.index] += e.value;
  vec.entries.clear();
  vec.entries.reserve(merged.size());
  for (const auto& [index, value] : merged) vec.entries.push_back({index, value});
}

}  // namespace

double HashedFeatureVector::value_at(std::uint32_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const Entry& e, std::uint32_t i) { return e.index < i; });
  return (it != entries.end() && it->index == index) ? it->value : 0.0;
}

double HashedFeatureVector::total_mass() const {
  double m = 0.0;
  for (const auto& e : entries) m += e.value;
  return m;
}

std::uint32_t feature_index(std::string_view ngram, std::uint64_t dim) {
  return static_cast<std::uint32_t>(stable_hash(ngram) & (dim - 1));
}

HashedFeatureVector hash_ngrams(const TokenStream& tokens, int n_max, std::uint64_t dim) {
  if (n_max < 1 || n_max > 3) throw ConfigError("n_max must be 1, 2 or 3");
  validate_dim(dim);
  HashedFeatureVector vec;
  vec.dim = dim;
  std::map<std::uint32_t, double> counts;
  std::string gram;
  for (const auto& sentence : tokens.sentences) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      gram.clear();
      for (int n = 1; n <= n_max && i + static_cast<std::size_t>(n) <= sentence.size(); ++n) {
        if (n > 1) gram += ' ';
        gram += sentence[i + static_cast<std::size_t>(n) - 1];
        counts[feature_index(gram, dim)] += 1.0;
      }
    }
  }
  merge_counts(vec, counts);
  return vec;
}

void add_tokens(HashedFeatureVector& vec, std::span<const std::string> tokens) {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : tokens) counts[feature_index(t, vec.dim)] += 1.0;
  merge_counts(vec, counts);
}

}  // namespace triage::textprep
