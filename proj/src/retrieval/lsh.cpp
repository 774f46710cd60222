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

#include "triage/retrieval/lsh.hpp"

#include <algorithm>
#include <future>
#include <limits>
#include <map>

#include <spdlog/spdlog.h>

#include "triage/common/error.hpp"
#include "triage/common/hash.hpp"
#include "triage/common/random.hpp"

namespace triage::retrieval {

namespace {

bool neighbor_before(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.id < b.id;
}

void keep_top(std::vector<Neighbor>& v, std::size_t k) {
  if (v.size() > k) {
    std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(), neighbor_before);
    v.resize(k);
  } else {
    std::sort(v.begin(), v.end(), neighbor_before);
  }
}

}  // namespace

std::vector<std::string> shingles(const textprep::TokenStream& tokens) {
  std::vector<std::string> out;
  for (const auto& sentence : tokens.sentences) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      out.push_back(sentence[i]);
      if (i + 1 < sentence.size()) out.push_back(sentence[i] + ' ' + sentence[i + 1]);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  std::size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
}

void LshOptions::validate() const {
  if (num_hashes < 1) throw ConfigError("num_hashes must be >= 1");
  if (bands < 1 || num_hashes % bands != 0) throw ConfigError("num_hashes must be divisible by bands");
  if (shards < 1) throw ConfigError("shards must be >= 1");
  if (neighbors < 1) throw ConfigError("neighbors must be >= 1");
}

MinHasher::MinHasher(std::size_t num_hashes, std::uint64_t seed) {
  Rng rng(seed);
  salts_.reserve(num_hashes);
  for (std::size_t i = 0; i < num_hashes; ++i) salts_.push_back(rng.next());
}

Signature MinHasher::sign(std::span<const std::string> shingle_set) const {
  Signature sig(salts_.size(), std::numeric_limits<std::uint64_t>::max());
  for (const auto& s : shingle_set) {
    const auto base = stable_hash(s);
    for (std::size_t i = 0; i < salts_.size(); ++i) sig[i] = std::min(sig[i], hash_combine(base, salts_[i]));
  }
  return sig;
}

double estimated_jaccard(const Signature& a, const Signature& b) {
  if (a.empty() || a.size() != b.size()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

std::uint64_t LshIndex::band_key(const Signature& sig, std::size_t band) const {
  const auto rows = options_.rows_per_band();
  std::uint64_t key = fmix64(band + 1);
  for (std::size_t r = 0; r < rows; ++r) key = hash_combine(key, sig[band * rows + r]);
  return key;
}

void LshIndex::index_all() {
  shards_.assign(options_.shards, {});
  for (std::size_t i = 0; i < signatures_.size(); ++i) {
    auto& shard = shards_[i % options_.shards];
    for (std::size_t b = 0; b < options_.bands; ++b) {
      shard[band_key(signatures_[i], b)].push_back(static_cast<std::uint32_t>(i));
    }
  }
}

LshIndex LshIndex::build(std::span<const Document> documents, const LshOptions& options) {
  options.validate();
  LshIndex index;
  index.options_ = options;
  index.hasher_ = MinHasher(options.num_hashes, options.seed);
  for (const auto& doc : documents) {
    const auto sh = shingles(doc.tokens);
    if (sh.empty()) {
      spdlog::warn("lsh: incident {} has no shingles; skipped", doc.id);
      continue;
    }
    index.ids_.push_back(doc.id);
    index.teams_.push_back(doc.team);
    index.signatures_.push_back(index.hasher_.sign(sh));
  }
  index.index_all();
  return index;
}

std::vector<Neighbor> LshIndex::neighbors(const textprep::TokenStream& query, std::size_t k) const {
  if (k < 1) throw ConfigError("k must be >= 1");
  const auto sh = shingles(query);
  if (sh.empty() || signatures_.empty()) return {};
  const auto sig = hasher_.sign(sh);
  std::vector<std::uint64_t> keys;
  keys.reserve(options_.bands);
  for (std::size_t b = 0; b < options_.bands; ++b) keys.push_back(band_key(sig, b));

  auto search = [&](std::size_t s) {
    std::vector<std::uint32_t> cand;
    for (const auto key : keys) {
      if (auto it = shards_[s].find(key); it != shards_[s].end()) {
        cand.insert(cand.end(), it->second.begin(), it->second.end());
      }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    std::vector<Neighbor> found;
    found.reserve(cand.size());
    for (const auto i : cand) found.push_back({ids_[i], teams_[i], estimated_jaccard(sig, signatures_[i])});
    keep_top(found, k);
    return found;
  };

  std::vector<std::future<std::vector<Neighbor>>> pending;
  pending.reserve(shards_.size());
  for (std::size_t s = 0; s < shards_.size(); ++s) pending.push_back(std::async(std::launch::async, search, s));
  std::vector<Neighbor> merged;
  for (auto& f : pending) {
    auto part = f.get();
    merged.insert(merged.end(), part.begin(), part.end());
  }
  keep_top(merged, k);
  return merged;
}

ModelOutput LshIndex::predict(const textprep::TokenStream& query) const {
  std::map<std::string, double> scores;
  for (const auto& n : neighbors(query, options_.neighbors)) {
    auto& s = scores[n.team];
    s = std::max(s, n.similarity);
  }
  return make_model_output(kModelId, std::move(scores), kTopN, true);
}

void LshIndex::save(Archive& a) const {
  a.put_scalar("si.format", "1");
  a.put("si.options", std::vector<std::uint64_t>{options_.num_hashes, options_.bands, options_.shards,
                                                 options_.neighbors, options_.seed});
  a.put("si.ids", ids_);
  a.put("si.teams", teams_);
  std::vector<std::uint64_t> flat;
  flat.reserve(signatures_.size() * options_.num_hashes);
  for (const auto& s : signatures_) flat.insert(flat.end(), s.begin(), s.end());
  a.put("si.signatures", std::move(flat), {signatures_.size(), options_.num_hashes});
}

LshIndex LshIndex::load(const Archive& a) {
  if (a.get_scalar("si.format") != "1") throw ValidationError("lsh archive: unsupported format");
  const auto opts = a.get_u64("si.options");
  if (opts.size() != 5) throw ValidationError("lsh archive: bad options");
  LshIndex index;
  index.options_ = {opts[0], opts[1], opts[2], opts[3], opts[4]};
  try {
    index.options_.validate();
  } catch (const ConfigError& e) {
    throw ValidationError(std::string("lsh archive: ") + e.what());
  }
  index.hasher_ = MinHasher(index.options_.num_hashes, index.options_.seed);
  index.ids_ = a.get_str("si.ids");
  index.teams_ = a.get_str("si.teams");
  const auto flat = a.get_u64("si.signatures");
  const auto n = index.ids_.size();
  const auto h = index.options_.num_hashes;
  if (index.teams_.size() != n || flat.size() != n * h) throw ValidationError("lsh archive: inconsistent arrays");
  for (std::size_t i = 0; i < n; ++i) {
    index.signatures_.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i * h),
                                   flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * h));
  }
  index.index_all();
  return index;
}

std::vector<Neighbor> brute_force_neighbors(std::span<const Document> documents,
                                            const textprep::TokenStream& query, std::size_t k) {
  const auto q = shingles(query);
  std::vector<Neighbor> all;
  all.reserve(documents.size());
  for (const auto& doc : documents) {
    const auto sh = shingles(doc.tokens);
    all.push_back({doc.id, doc.team, jaccard(q, sh)});
  }
  keep_top(all, k);
  return all;
}

}  // namespace triage::retrieval
