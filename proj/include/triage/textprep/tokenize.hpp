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

#include <string>
#include <string_view>
#include <vector>

namespace triage::textprep {

enum class SourceField { kTitle, kSummary, kDiscussion, kCombined };

struct TokenStream {
  std::vector<std::vector<std::string>> sentences;
  SourceField source_field = SourceField::kCombined;

  std::size_t token_count() const;
  bool empty() const { return token_count() == 0; }
  std::vector<std::string> flatten() const;
};

/// Splits cleaned text into sentences and tokens.
///
/// A newline always ends a sentence. '.', '!' and '?' end one only when
/// followed by whitespace, end of text or another terminator, so "a.b.c"
/// stays one sentence of three tokens. Word characters are [a-z0-9_] and
/// any non-ASCII byte; everything else separates tokens. Placeholders such
/// as <num> are kept whole. Empty sentences are dropped.
TokenStream tokenize(std::string_view cleaned, SourceField field = SourceField::kCombined);

/// Sorted, de-duplicated tokens of a stream.
std::vector<std::string> token_set(const TokenStream& tokens);

}  // namespace triage::textprep
