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

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "triage/common/error.hpp"
#include "triage/common/files.hpp"
#include "triage/common/hash.hpp"
#include "triage/common/model_output.hpp"

namespace triage {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kUnavailable: return "unavailable";
    case ErrorKind::kTraining: return "training";
  }
  return "unknown";
}

ModelOutput make_model_output(std::string model_id, std::map<std::string, double> scores,
                              std::size_t n, bool drop_zero) {
  ModelOutput out;
  out.model_id = std::move(model_id);
  std::vector<TeamScore> ranked;
  ranked.reserve(scores.size());
  for (auto& [team, conf] : scores) {
    conf = std::clamp(conf, 0.0, 1.0);
    if (drop_zero && conf <= 0.0) continue;
    ranked.push_back({team, conf});
  }
  std::sort(ranked.begin(), ranked.end(), ranks_before);
  if (ranked.size() > n) ranked.resize(n);
  out.scores = std::move(scores);
  out.top = std::move(ranked);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  write_file_atomic(path, value.dump(2) + "\n");
}

std::string file_fingerprint(const std::filesystem::path& path) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << stable_hash(read_file(path));
  return ss.str();
}

}  // namespace triage
