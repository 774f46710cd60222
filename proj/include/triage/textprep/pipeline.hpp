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
#include <vector>

#include "triage/corpus/incident.hpp"
#include "triage/textprep/hashing.hpp"
#include "triage/textprep/phrases.hpp"
#include "triage/textprep/tokenize.hpp"

namespace triage::textprep {

/// Number of discussion entries that count as textual input.
inline constexpr std::size_t kDiscussionEntries = 3;

/// Title, summary and the first three discussion entries, one per line.
std::string textual_content(const corpus::Incident& incident);

/// Cleaned and tokenized textual content, noisy phrases removed.
TokenStream prepare_tokens(const corpus::Incident& incident, const Stoplist& stoplist = {});

/// Contextual fields as "field=value" tokens (source, service, device,
/// datacenter, severity, type and one per keyword). Empty values are skipped.
std::vector<std::string> contextual_tokens(const corpus::Incident& incident);

struct FeaturizeOptions {
  int n_max = 2;
  std::uint64_t dim = kDefaultHashDim;
  bool include_context = true;
};

/// Hashed n-grams of the prepared tokens plus the contextual tokens.
HashedFeatureVector featurize(const TokenStream& tokens, const corpus::Incident& incident,
                              const FeaturizeOptions& options = {});

}  // namespace triage::textprep
