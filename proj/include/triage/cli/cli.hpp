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

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace triage::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr int kDefaultPort = 8080;
inline constexpr const char* kDefaultArtifactDir = "artifacts";

/// Reads an environment variable; nullptr when unset.
using EnvLookup = std::function<const char*(const char*)>;

/// Serving settings after layering flags over the config file's "serve"
/// section over SERVE_PORT / ARTIFACT_DIR over defaults.
struct ServeSettings {
  std::string host = "127.0.0.1";
  int port = kDefaultPort;
  std::filesystem::path artifact = kDefaultArtifactDir;
  std::filesystem::path corpus;  // empty: the artifact's training corpus
  std::filesystem::path log_dir = "logs";
  std::filesystem::path rules_dir = "rules";
  int deadline_ms = 500;
  bool fault_injection = false;
};

/// Flag values given on the command line; unset members fall through.
struct ServeFlags {
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::filesystem::path> artifact;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> log_dir;
  std::optional<std::filesystem::path> rules_dir;
  std::optional<int> deadline_ms;
  bool fault_injection = false;
};

/// Throws ConfigError on unknown keys, mistyped values or a bad SERVE_PORT.
ServeSettings resolve_serve_settings(const ServeFlags& flags, const nlohmann::json& file_section,
                                     const EnvLookup& env);

/// Artifact directory from the flag, else ARTIFACT_DIR, else the default.
std::filesystem::path resolve_artifact_dir(const std::optional<std::filesystem::path>& flag, const EnvLookup& env);

/// Subcommands: generate, train, eval, ablate, serve, retrain. Returns 0 on
/// success, 2 with usage text for bad flags, 1 with a one-line JSON error
/// on `err` for pipeline failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env);
int run(int argc, const char* const* argv);

}  // namespace triage::cli
