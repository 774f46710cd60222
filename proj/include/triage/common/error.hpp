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

#include <stdexcept>
#include <string>

namespace triage {

// Error kinds map one-to-one onto CLI error codes and HTTP statuses.
enum class ErrorKind { kConfig, kIo, kValidation, kNotFound, kConflict, kUnavailable, kTraining };

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorKind::kConfig, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::kIo, m) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error(ErrorKind::kValidation, m) {}
};
struct NotFoundError : Error {
  explicit NotFoundError(const std::string& m) : Error(ErrorKind::kNotFound, m) {}
};
struct ConflictError : Error {
  explicit ConflictError(const std::string& m) : Error(ErrorKind::kConflict, m) {}
};
struct UnavailableError : Error {
  explicit UnavailableError(const std::string& m) : Error(ErrorKind::kUnavailable, m) {}
};
struct TrainingError : Error {
  explicit TrainingError(const std::string& m) : Error(ErrorKind::kTraining, m) {}
};

}  // namespace triage
