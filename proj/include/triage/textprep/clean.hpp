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

namespace triage::textprep {

/// Normalizes raw incident text:
///   - markup tags are stripped (their content kept), entities decoded;
///   - base64 / binary blobs and control characters removed;
///   - lowercased and NFC-normalized;
///   - URLs -> <url>, GUIDs -> <guid>, long hex runs -> <hex>, numbers -> <num>;
///   - runs of blanks collapsed; line breaks preserved (one per run).
/// Total and idempotent: clean_text(clean_text(x)) == clean_text(x).
std::string clean_text(std::string_view raw);

/// True when `text` starts with one of the placeholder tokens; sets `len`.
bool match_placeholder(std::string_view text, std::size_t& len);

}  // namespace triage::textprep
