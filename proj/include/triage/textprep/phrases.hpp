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

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "triage/corpus/corpus.hpp"
#include "triage/textprep/tokenize.hpp"

namespace triage::textprep {

using Phrase = std::vector<std::string>;

std::string join_phrase(const Phrase& phrase);
Phrase split_phrase(const std::string& text);

/// Set of noisy phrases (1 to 4 tokens).
class Stoplist {
 public:
  static constexpr std::size_t kMaxPhraseLength = 4;

  Stoplist() = default;
  /// Throws ValidationError for empty phrases or phrases longer than four tokens.
  explicit Stoplist(const std::vector<Phrase>& phrases);

  bool empty() const { return phrases_.empty(); }
  std::size_t size() const { return phrases_.size(); }
  bool contains(const Phrase& phrase) const { return phrases_.count(phrase) != 0; }
  const std::set<Phrase>& phrases() const { return phrases_; }

  /// JSON array of space-joined phrases.
  std::string to_json() const;
  static Stoplist from_json(const std::string& text);

 private:
  std::set<Phrase> phrases_;
};

/// Deletes stoplist matches within each sentence, scanning left to right and
/// taking the longest match at each position. Sentences left empty are dropped.
TokenStream remove_noisy_phrases(const TokenStream& tokens, const Stoplist& stoplist);

struct StoplistOptions {
  /// Normalized team entropy a phrase must reach to count as non-discriminative.
  double min_team_entropy = 0.9;
  std::size_t max_phrase_length = Stoplist::kMaxPhraseLength;
};

/// Frequent but non-discriminative phrases: incident-level document frequency
/// above `doc_frequency_threshold`, and a near-uniform distribution of the
/// per-team occurrence rate. Throws ConfigError unless 0 < threshold < 1.
Stoplist build_stoplist(const corpus::Corpus& corpus, double doc_frequency_threshold,
                        const StoplistOptions& options = {});

/// Function words plus the placeholder tokens.
const std::set<std::string>& default_stopwords();

/// Top-k 1-3-grams by (frequency in the stream) x (mean member idf). Phrases
/// containing a stopword and phrases scoring 0 are skipped; equal scores are
/// ordered lexicographically by joined text.
std::vector<Phrase> extract_key_phrases(const TokenStream& tokens,
                                        const std::unordered_map<std::string, double>& idf, std::size_t k,
                                        const std::set<std::string>& stopwords = default_stopwords());

}  // namespace triage::textprep
