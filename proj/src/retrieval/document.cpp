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

#include "triage/retrieval/document.hpp"

#include "triage/textprep/pipeline.hpp"

namespace triage::retrieval {

std::vector<Document> make_documents(const corpus::Corpus& corpus, const textprep::Stoplist& stoplist) {
  std::vector<Document> docs;
  docs.reserve(corpus.size());
  for (const auto& inc : corpus.incidents()) {
    docs.push_back({inc.id, corpus.original_team(inc), textprep::prepare_tokens(inc, stoplist)});
  }
  return docs;
}

}  // namespace triage::retrieval
