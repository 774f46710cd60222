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

#include "triage/corpus/corpus.hpp"
#include "triage/textprep/phrases.hpp"
#include "triage/textprep/tokenize.hpp"

namespace triage::retrieval {

/// One indexed incident: id, owning team and prepared text tokens.
struct Document {
  std::string id;
  std::string team;
  textprep::TokenStream tokens;
};

/// Prepared documents for every incident of `corpus`, in corpus order.
/// Teams are the pre-merge labels, so teams folded into Other by the
/// classifiers stay reachable through retrieval.
std::vector<Document> make_documents(const corpus::Corpus& corpus, const textprep::Stoplist& stoplist = {});

}  // namespace triage::retrieval
