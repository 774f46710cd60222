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

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "triage/common/model_output.hpp"
#include "triage/service/pipeline.hpp"

namespace triage::service {

inline constexpr int kDefaultDeadlineMs = 500;

struct RegistryEntry {
  std::string id;
  std::string family;
  bool enabled = true;
  /// Injected failure: the model is skipped and counts as failed.
  bool failed = false;
  int deadline_ms = kDefaultDeadlineMs;
};

using ModelFn = std::function<ModelOutput(const PreparedQuery&)>;

struct FanOutResult {
  std::vector<ModelOutput> outputs;  // responding models, registry order
  std::vector<std::string> failed;   // injected, thrown or past the deadline
  std::size_t total = 0;             // enabled models
};

/// Model id -> callable plus serving flags. Flags may change while
/// requests are in flight; each fan-out works on a snapshot.
class ModelRegistry {
 public:
  /// Throws ConflictError for a duplicate id.
  void add(RegistryEntry entry, ModelFn fn);
  std::vector<RegistryEntry> entries() const;
  std::size_t size() const;
  /// Throws NotFoundError for an unknown id.
  void set_failed(const std::string& id, bool failed);
  void set_enabled(const std::string& id, bool enabled);

  /// Runs every enabled, non-failed model concurrently. A model that throws
  /// or misses its deadline counts as failed for this call only.
  FanOutResult fan_out(const std::shared_ptr<const PreparedQuery>& query) const;

 private:
  struct Slot {
    RegistryEntry entry;
    std::shared_ptr<const ModelFn> fn;
  };
  Slot& slot(const std::string& id);

  mutable std::mutex mu_;
  std::vector<Slot> slots_;
};

/// One entry per model of the system, in `TriageSystem::models()` order.
std::unique_ptr<ModelRegistry> make_registry(const std::shared_ptr<const TriageSystem>& system,
                                             int deadline_ms = kDefaultDeadlineMs);

}  // namespace triage::service
