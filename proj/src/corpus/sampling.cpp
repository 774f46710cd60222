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

#include "triage/corpus/sampling.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "triage/common/error.hpp"
#include "triage/common/hash.hpp"
#include "triage/common/random.hpp"

namespace triage::corpus {

void SamplingConfig::validate() const {
  if (per_class_cap < 1) throw ConfigError("per_class_cap must be >= 1");
  if (num_buckets < 1) throw ConfigError("num_buckets must be >= 1");
  if (!(recency_halflife_days > 0.0)) throw ConfigError("recency_halflife_days must be > 0");
  if (same_title_cap < 1) throw ConfigError("same_title_cap must be >= 1");
  if (!(high_severity_quota >= 0.0 && high_severity_quota <= 1.0)) {
    throw ConfigError("high_severity_quota must lie in [0,1]");
  }
}

std::string normalize_title(std::string_view title) {
  std::string out;
  out.reserve(title.size());
  bool space = false;
  for (std::size_t i = 0; i < title.size();) {
    const unsigned char c = static_cast<unsigned char>(title[i]);
    if (std::isdigit(c)) {
      while (i < title.size() && std::isdigit(static_cast<unsigned char>(title[i]))) ++i;
      if (space && !out.empty()) out += ' ';
      space = false;
      out += "<num>";
      continue;
    }
    if (std::isspace(c)) {
      space = true;
    } else {
      if (space && !out.empty()) out += ' ';
      space = false;
      out += static_cast<char>(std::tolower(c));
    }
    ++i;
  }
  return out;
}

double recency_weight(std::int64_t created_at, std::int64_t reference_time, double halflife_days) {
  const double age_days = static_cast<double>(reference_time - created_at) / 86400.0;
  return std::exp2(-age_days / halflife_days);
}

std::vector<const Incident*> same_title_capped_pool(const Corpus& train, std::size_t same_title_cap,
                                                    const TitleNormalizer& normalize) {
  std::map<std::pair<std::string, std::string>, std::vector<const Incident*>> groups;
  for (const auto& inc : train.incidents()) {
    groups[{normalize(inc.title), inc.owning_team}].push_back(&inc);
  }
  std::vector<const Incident*> pool;
  pool.reserve(train.size());
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), [](const Incident* a, const Incident* b) {
      if (a->created_at != b->created_at) return a->created_at > b->created_at;
      return a->id < b->id;
    });
    const auto keep = std::min(members.size(), same_title_cap);
    pool.insert(pool.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(pool.begin(), pool.end(), [](const Incident* a, const Incident* b) { return a->id < b->id; });
  return pool;
}

namespace {

// Weighted sampling without replacement via the Gumbel-top-k trick:
// key = log(w) + Gumbel noise; the k largest keys form the sample.
std::vector<const Incident*> weighted_draw(const std::vector<const Incident*>& group, std::size_t k,
                                           std::int64_t reference_time, double halflife_days,
                                           Rng& rng) {
  if (k >= group.size()) return group;
  struct Keyed {
    double key;
    const Incident* inc;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(group.size());
  for (const auto* inc : group) {
    const double age_days = static_cast<double>(reference_time - inc->created_at) / 86400.0;
    const double log_w = -age_days / halflife_days * std::numbers::ln2;
    const double gumbel = -std::log(-std::log(rng.uniform_exclusive()));
    keyed.push_back({log_w + gumbel, inc});
  }
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end(),
                    [](const Keyed& a, const Keyed& b) {
                      if (a.key != b.key) return a.key > b.key;
                      return a.inc->id < b.inc->id;
                    });
  std::vector<const Incident*> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(keyed[i].inc);
  return out;
}

}  // namespace

std::vector<Bucket> sample_and_partition(const Corpus& train, const SamplingConfig& config,
                                         const TitleNormalizer& normalize) {
  config.validate();
  if (train.empty()) throw ValidationError("cannot sample an empty training corpus");
  const auto num_classes = train.team_index().size();
  if (config.per_class_cap * num_classes > config.max_bucket_examples) {
    throw ConfigError("per_class_cap * num_classes exceeds the bucket budget; suggested cap " +
                      std::to_string(std::max<std::size_t>(1, config.max_bucket_examples / num_classes)));
  }

  const auto pool = same_title_capped_pool(train, config.same_title_cap, normalize);
  const std::int64_t reference_time = train.time_range().second;

  // Per class: high-impact and low-impact groups, in id order.
  std::map<std::string, std::pair<std::vector<const Incident*>, std::vector<const Incident*>>> groups;
  for (const auto* inc : pool) {
    auto& g = groups[inc->owning_team];
    (inc->is_high_impact() ? g.first : g.second).push_back(inc);
  }

  const auto cap = config.per_class_cap;
  const auto quota_slots = static_cast<std::size_t>(std::llround(config.high_severity_quota * cap));

  std::vector<Bucket> buckets(config.num_buckets);
  for (std::size_t b = 0; b < config.num_buckets; ++b) {
    Bucket& bucket = buckets[b];
    bucket.bucket_id = static_cast<int>(b);
    for (const auto& [team, g] : groups) {
      const auto& [high, low] = g;
      Rng rng = Rng::derive(config.rng_seed, hash_combine(b, stable_hash(team)));
      std::size_t want_high = high.size();
      std::size_t want_low = low.size();
      if (high.size() + low.size() > cap) {
        // Best effort: a short group hands its unused slots to the other.
        want_high = std::min(high.size(), quota_slots);
        want_low = std::min(low.size(), cap - want_high);
        want_high = std::min(high.size(), cap - want_low);
      }
      auto picked = weighted_draw(high, want_high, reference_time, config.recency_halflife_days, rng);
      auto picked_low = weighted_draw(low, want_low, reference_time, config.recency_halflife_days, rng);
      picked.insert(picked.end(), picked_low.begin(), picked_low.end());
      bucket.class_counts[team] = picked.size();
      bucket.incidents.insert(bucket.incidents.end(), picked.begin(), picked.end());
    }
    std::sort(bucket.incidents.begin(), bucket.incidents.end(),
              [](const Incident* x, const Incident* y) { return x->id < y->id; });
  }
  return buckets;
}

}  // namespace triage::corpus
