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
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "triage/corpus/corpus.hpp"

namespace triage::corpus {

struct SamplingConfig {
  std::size_t per_class_cap = 500;
  std::size_t num_buckets = 10;
  double recency_halflife_days = 60.0;
  std::size_t same_title_cap = 50;
  double high_severity_quota = 0.8;
  std::uint64_t rng_seed = 0;
  /// Upper bound on per_class_cap * num_classes.
  std::size_t max_bucket_examples = 20'000'000;

  void validate() const;
};

/// A capped, class-balanced sample. Incidents point into the corpus passed to
/// sample_and_partition and share its lifetime.
struct Bucket {
  int bucket_id = 0;
  std::vector<const Incident*> incidents;
  std::map<std::string, std::size_t> class_counts;
};

/// Lowercases, maps digit runs to <num> and collapses whitespace.
std::string normalize_title(std::string_view title);

using TitleNormalizer = std::function<std::string(std::string_view)>;

/// Recency weight 2^(-age_days / halflife).
double recency_weight(std::int64_t created_at, std::int64_t reference_time, double halflife_days);

/// Incidents that survive the per-(normalized title, team) cap; the most
/// recent ones are kept, ties by id.
std::vector<const Incident*> same_title_capped_pool(const Corpus& train, std::size_t same_title_cap,
                                                    const TitleNormalizer& normalize);

/// Draws `num_buckets` buckets. Per bucket and class, at most per_class_cap
/// incidents are drawn without replacement, weighted by recency; the
/// high-impact quota decides how capped slots split between Sev0-2/CRI and
/// low-severity LSIs. Buckets differ only by their random stream.
std::vector<Bucket> sample_and_partition(const Corpus& train, const SamplingConfig& config,
                                         const TitleNormalizer& normalize = normalize_title);

}  // namespace triage::corpus
