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

#include "triage/textprep/pipeline.hpp"

#include <algorithm>

#include "triage/textprep/clean.hpp"

namespace triage::textprep {

std::string textual_content(const corpus::Incident& incident) {
  std::string out = incident.title;
  out += '\n';
  out += incident.summary;
  const auto n = std::min(incident.discussion.size(), kDiscussionEntries);
  for (std::size_t i = 0; i < n; ++i) {
    out += '\n';
    out += incident.discussion[i];
  }
  return out;
}

TokenStream prepare_tokens(const corpus::Incident& incident, const Stoplist& stoplist) {
  auto tokens = tokenize(clean_text(textual_content(incident)));
  if (stoplist.empty()) return tokens;
  return remove_noisy_phrases(tokens, stoplist);
}

std::vector<std::string> contextual_tokens(const corpus::Incident& incident) {
  std::vector<std::string> out;
  auto add = [&](const char* field, const std::string& value) {
    if (!value.empty()) out.push_back(std::string("ctx:") + field + "=" + value);
  };
  add("src", incident.source_name);
  add("svc", incident.originating_service_id);
  add("dev", incident.occurring_device_name);
  add("dc", incident.raising_dc);
  add("sev", std::to_string(incident.severity));
  add("type", corpus::to_string(incident.incident_type));
  for (const auto& kw : incident.keywords) add("kw", kw);
  return out;
}

HashedFeatureVector featurize(const TokenStream& tokens, const corpus::Incident& incident,
                              const FeaturizeOptions& options) {
  auto vec = hash_ngrams(tokens, options.n_max, options.dim);
  if (options.include_context) {
    const auto ctx = contextual_tokens(incident);
    add_tokens(vec, ctx);
  }
  return vec;
}

}  // namespace triage::textprep
