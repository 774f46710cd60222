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

#include "triage/textprep/tokenize.hpp"

#include <algorithm>

#include "triage/textprep/clean.hpp"

namespace triage::textprep {

namespace {

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || u >= 0x80;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

}  // namespace

std::size_t TokenStream::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::vector<std::string> TokenStream::flatten() const {
  std::vector<std::string> out;
  out.reserve(token_count());
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

TokenStream tokenize(std::string_view text, SourceField field) {
  TokenStream out;
  out.source_field = field;
  std::vector<std::string> sentence;
  auto end_sentence = [&] {
    if (!sentence.empty()) out.sentences.push_back(std::move(sentence));
    sentence.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    std::size_t plen = 0;
    if (c == '<' && match_placeholder(text.substr(i), plen)) {
      sentence.emplace_back(text.substr(i, plen));
      i += plen;
    } else if (is_word_char(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word_char(text[j])) ++j;
      sentence.emplace_back(text.substr(i, j - i));
      i = j;
    } else if (c == '\n') {
      end_sentence();
      ++i;
    } else if (is_terminator(c)) {
      const bool ends = i + 1 == text.size() || is_blank(text[i + 1]) || is_terminator(text[i + 1]);
      if (ends) end_sentence();
      ++i;
    } else {
      ++i;
    }
  }
  end_sentence();
  return out;
}

std::vector<std::string> token_set(const TokenStream& tokens) {
  auto flat = tokens.flatten();
  std::sort(flat.begin(), flat.end());
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  return flat;
}

}  // namespace triage::textprep
