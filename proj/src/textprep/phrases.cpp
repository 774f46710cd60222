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

#include "triage/textprep/phrases.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "triage/common/error.hpp"
#include "triage/textprep/clean.hpp"
#include "triage/textprep/pipeline.hpp"

namespace triage::textprep {

std::string join_phrase(const Phrase& phrase) {
  std::string out;
  for (const auto& t : phrase) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

Phrase split_phrase(const std::string& text) {
  Phrase out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Stoplist::Stoplist(const std::vector<Phrase>& phrases) {
  for (const auto& p : phrases) {
    if (p.empty() || p.size() > kMaxPhraseLength) {
      throw ValidationError("stoplist phrase must have 1 to 4 tokens: '" + join_phrase(p) + "'");
    }
    phrases_.insert(p);
  }
}

std::string Stoplist::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : phrases_) arr.push_back(join_phrase(p));
  return arr.dump(2);
}

Stoplist Stoplist::from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed stoplist: ") + e.what());
  }
  if (!arr.is_array()) throw ValidationError("stoplist must be a JSON array");
  std::vector<Phrase> phrases;
  for (const auto& item : arr) {
    if (!item.is_string()) throw ValidationError("stoplist entries must be strings");
    phrases.push_back(split_phrase(item.get<std::string>()));
  }
  return Stoplist(phrases);
}

TokenStream remove_noisy_phrases(const TokenStream& tokens, const Stoplist& stoplist) {
  if (stoplist.empty()) return tokens;
  TokenStream out;
  out.source_field = tokens.source_field;
  Phrase probe;
  for (const auto& sentence : tokens.sentences) {
    std::vector<std::string> kept;
    std::size_t i = 0;
    while (i < sentence.size()) {
      std::size_t matched = 0;
      const auto longest = std::min(Stoplist::kMaxPhraseLength, sentence.size() - i);
      for (std::size_t len = longest; len >= 1; --len) {
        probe.assign(sentence.begin() + static_cast<std::ptrdiff_t>(i),
                     sentence.begin() + static_cast<std::ptrdiff_t>(i + len));
        if (stoplist.contains(probe)) {
          matched = len;
          break;
        }
      }
      if (matched > 0) {
        i += matched;
      } else {
        kept.push_back(sentence[i++]);
      }
    }
    if (!kept.empty()) out.sentences.push_back(std::move(kept));
  }
  return out;
}

namespace {

std::unordered_set<std::string> distinct_ngrams(const TokenStream& tokens, std::size_t max_n) {
  std::unordered_set<std::string> grams;
  std::string gram;
  for (const auto& sentence : tokens.sentences) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      gram.clear();
      for (std::size_t n = 1; n <= max_n && i + n <= sentence.size(); ++n) {
        if (n > 1) gram += ' ';
        gram += sentence[i + n - 1];
        grams.insert(gram);
      }
    }
  }
  return grams;
}

}  // namespace

Stoplist build_stoplist(const corpus::Corpus& corpus, double doc_frequency_threshold,
                        const StoplistOptions& options) {
  if (!(doc_frequency_threshold > 0.0 && doc_frequency_threshold < 1.0)) {
    throw ConfigError("stoplist document-frequency threshold must lie in (0,1)");
  }
  if (options.max_phrase_length < 1 || options.max_phrase_length > Stoplist::kMaxPhraseLength) {
    throw ConfigError("stoplist phrase length must be 1 to 4");
  }
  if (corpus.empty()) return {};

  std::vector<TokenStream> streams;
  streams.reserve(corpus.size());
  for (const auto& inc : corpus.incidents()) streams.push_back(prepare_tokens(inc));

  std::unordered_map<std::string, std::size_t> df;
  for (const auto& s : streams) {
    for (auto& g : distinct_ngrams(s, options.max_phrase_length)) ++df[g];
  }
  const double n = static_cast<double>(corpus.size());
  std::unordered_map<std::string, std::map<std::string, std::size_t>> per_team;
  for (const auto& [gram, count] : df) {
    if (static_cast<double>(count) / n > doc_frequency_threshold) per_team[gram];
  }
  if (per_team.empty()) return {};

  const auto team_sizes = corpus.team_counts();
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const auto& team = corpus.incidents()[i].owning_team;
    for (auto& g : distinct_ngrams(streams[i], options.max_phrase_length)) {
      if (auto it = per_team.find(g); it != per_team.end()) ++it->second[team];
    }
  }

  std::vector<Phrase> phrases;
  const double num_teams = static_cast<double>(team_sizes.size());
  for (const auto& [gram, counts] : per_team) {
    double entropy = 1.0;
    if (num_teams > 1) {
      double total_rate = 0.0;
      std::vector<double> rates;
      for (const auto& [team, size] : team_sizes) {
        auto it = counts.find(team);
        const double r = it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(size);
        rates.push_back(r);
        total_rate += r;
      }
      double h = 0.0;
      for (double r : rates) {
        if (r > 0.0) {
          const double p = r / total_rate;
          h -= p * std::log(p);
        }
      }
      entropy = h / std::log(num_teams);
    }
    if (entropy >= options.min_team_entropy) phrases.push_back(split_phrase(gram));
  }
  return Stoplist(phrases);
}

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "<num>", "<guid>", "<url>", "<hex>", "a",    "about", "after", "all",   "also", "an",    "and",
      "any",   "are",    "as",    "at",    "be",   "been",  "before", "being", "but",  "by",    "can",
      "could", "did",    "do",    "does",  "for",  "from",  "had",   "has",   "have", "he",    "her",
      "his",   "how",    "i",     "if",    "in",   "into",  "is",    "it",    "its",  "me",    "more",
      "my",    "no",     "not",   "of",    "on",   "or",    "our",   "out",   "she",  "so",    "some",
      "than",  "that",   "the",   "their", "them", "then",  "there", "these", "they", "this",  "to",
      "up",    "us",     "was",   "we",    "were", "what",  "when",  "which", "while", "who",  "will",
      "with",  "would",  "you",   "your"};
  return words;
}

std::vector<Phrase> extract_key_phrases(const TokenStream& tokens,
                                        const std::unordered_map<std::string, double>& idf, std::size_t k,
                                        const std::set<std::string>& stopwords) {
  if (k == 0) throw ConfigError("key phrase count must be >= 1");
  std::map<std::string, std::pair<double, double>> stats;  // joined -> (tf, mean idf)
  for (const auto& sentence : tokens.sentences) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      std::string gram;
      double idf_sum = 0.0;
      for (std::size_t n = 1; n <= 3 && i + n <= sentence.size(); ++n) {
        const auto& tok = sentence[i + n - 1];
        if (stopwords.count(tok) != 0) break;
        if (n > 1) gram += ' ';
        gram += tok;
        auto it = idf.find(tok);
        idf_sum += it == idf.end() ? 0.0 : it->second;
        auto& s = stats[gram];
        s.first += 1.0;
        s.second = idf_sum / static_cast<double>(n);
      }
    }
  }
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [gram, s] : stats) {
    const double score = s.first * s.second;
    if (score > 0.0) ranked.emplace_back(score, gram);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<Phrase> out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(split_phrase(ranked[i].second));
  return out;
}

}  // namespace triage::textprep
