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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triage/common/archive.hpp"
#include "triage/textprep/hashing.hpp"

namespace triage::textprep {

/// Hashed feature indices retained after selection, with their MI scores.
struct FeatureSpace {
  std::uint64_t dim = kDefaultHashDim;
  std::vector<std::uint32_t> selected;  // ascending
  std::map<std::uint32_t, double> mi_scores;

  std::size_t size() const { return selected.size(); }
  /// Dense column of a hashed index, or nullopt when not selected.
  std::optional<std::size_t> column(std::uint32_t index) const;

  void save(Archive& archive, const std::string& prefix) const;
  static FeatureSpace load(const Archive& archive, const std::string& prefix);
};

struct MiOptions {
  /// Pseudo-count added to every cell of the presence x class table.
  double smoothing = 1.0;
};

/// Mutual information (nats) between binarized feature presence and the
/// label, for every index present in at least one vector. Features present
/// in every example or in none carry no information and score 0.
std::map<std::uint32_t, double> mutual_information(std::span<const HashedFeatureVector> vectors,
                                                   std::span<const std::string> labels,
                                                   const MiOptions& options = {});

/// Keeps the top-k indices by MI (ties by lower index); zero-MI features are
/// never selected. Throws ValidationError on mismatched sizes, fewer than two
/// examples or labels, and ConfigError when k == 0.
FeatureSpace select_features_mi(std::span<const HashedFeatureVector> vectors,
                                std::span<const std::string> labels, std::size_t k,
                                const MiOptions& options = {});

}  // namespace triage::textprep
