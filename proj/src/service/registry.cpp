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

#include "triage/service/registry.hpp"

#include <chrono>
#include <future>
#include <thread>

#include <spdlog/spdlog.h>

#include "triage/common/error.hpp"

namespace triage::service {

void ModelRegistry::add(RegistryEntry entry, ModelFn fn) {
  std::lock_guard lock(mu_);
  for (const auto& s : slots_) {
    if (s.entry.id == entry.id) throw ConflictError("model " + entry.id + " is already registered");
  }
  slots_.push_back({std::move(entry), std::make_shared<const ModelFn>(std::move(fn))});
}

std::vector<RegistryEntry> ModelRegistry::entries() const {
  std::lock_guard lock(mu_);
  std::vector<RegistryEntry> out;
  for (const auto& s : slots_) out.push_back(s.entry);
  return out;
}

std::size_t ModelRegistry::size() const {
  std::lock_guard lock(mu_);
  return slots_.size();
}

ModelRegistry::Slot& ModelRegistry::slot(const std::string& id) {
  for (auto& s : slots_) {
    if (s.entry.id == id) return s;
  }
  throw NotFoundError("unknown model " + id);
}

void ModelRegistry::set_failed(const std::string& id, bool failed) {
  std::lock_guard lock(mu_);
  slot(id).entry.failed = failed;
}

void ModelRegistry::set_enabled(const std::string& id, bool enabled) {
  std::lock_guard lock(mu_);
  slot(id).entry.enabled = enabled;
}

FanOutResult ModelRegistry::fan_out(const std::shared_ptr<const PreparedQuery>& query) const {
  std::vector<Slot> snapshot;
  {
    std::lock_guard lock(mu_);
    snapshot = slots_;
  }
  FanOutResult result;
  struct Pending {
    const RegistryEntry* entry;
    std::future<ModelOutput> future;
  };
  std::vector<Pending> pending;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& s : snapshot) {
    if (!s.entry.enabled) continue;
    ++result.total;
    if (s.entry.failed) {
      result.failed.push_back(s.entry.id);
      continue;
    }
    // Detached so a model past its deadline never blocks the request.
    std::packaged_task<ModelOutput()> task([fn = s.fn, query] { return (*fn)(*query); });
    pending.push_back({&s.entry, task.get_future()});
    std::thread(std::move(task)).detach();
  }
  for (auto& p : pending) {
    const auto deadline = start + std::chrono::milliseconds(p.entry->deadline_ms);
    if (p.future.wait_until(deadline) != std::future_status::ready) {
      spdlog::warn("model {} missed its {} ms deadline", p.entry->id, p.entry->deadline_ms);
      result.failed.push_back(p.entry->id);
      continue;
    }
    try {
      auto out = p.future.get();
      out.model_id = p.entry->id;
      result.outputs.push_back(std::move(out));
    } catch (const std::exception& e) {
      spdlog::warn("model {} failed: {}", p.entry->id, e.what());
      result.failed.push_back(p.entry->id);
    }
  }
  return result;
}

std::unique_ptr<ModelRegistry> make_registry(const std::shared_ptr<const TriageSystem>& system, int deadline_ms) {
  auto registry = std::make_unique<ModelRegistry>();
  for (const auto& info : system->models()) {
    registry->add({info.id, info.family, true, false, deadline_ms},
                  [system, id = info.id](const PreparedQuery& q) { return system->predict(id, q); });
  }
  return registry;
}

}  // namespace triage::service
