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
#include <vector>

#include "triage/textprep/tokenize.hpp"

namespace triage::textprep {

inline constexpr std::uint64_t kDefaultHashDim = std::uint64_t{1} << 20;

/// Sparse non-negative vector; entries sorted by index, no duplicates.
struct HashedFeatureVector {
  struct Entry {
    std::uint32_t index = 0;
    double value = 0.0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::uint64_t dim = kDefaultHashDim;
  std::vector<Entry> entries;

  double value_at(std::uint32_t index) const;
  double total_mass() const;
  friend bool operator==(const HashedFeatureVector&, const HashedFeatureVector&) = default;
};

/// Index of an n-gram (tokens joined by one blank) in a space of size `dim`.
std::uint32_t feature_index(std::string_view ngram, std::uint64_t dim);

/// Counts every within-sentence n-gram for n <= n_max at its hashed index.
/// Throws ConfigError unless n_max is in [1,3] and dim is a power of two in
/// [2^10, 2^32].
HashedFeatureVector hash_ngrams(const TokenStream& tokens, int n_max, std::uint64_t dim = kDefaultHashDim);

/// Adds one count per extra token (contextual features) into `vec`.
void add_tokens(HashedFeatureVector& vec, std::span<const std::string> tokens);

}  // namespace triage::textprep
