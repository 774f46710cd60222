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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace triage {

/// Versioned binary container of named, shape-tagged arrays.
///
/// Layout (little-endian):
///   magic "TRIAGEAR" | u32 format version | u32 entry count
///   per entry: u32 name length | name bytes | u8 dtype | u32 rank |
///              u64 dims[rank] | payload
/// Strings are stored as a u64 count followed by (u32 length, bytes) pairs.
/// Entries are written in name order, so identical content always yields
/// identical bytes.
class Archive {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  enum class DType : std::uint8_t { kF64 = 1, kF32 = 2, kI64 = 3, kU64 = 4, kI32 = 5, kStr = 6 };

  void put(const std::string& name, std::vector<double> data, std::vector<std::uint64_t> shape = {});
  void put(const std::string& name, std::vector<float> data, std::vector<std::uint64_t> shape = {});
  void put(const std::string& name, std::vector<std::int64_t> data,
           std::vector<std::uint64_t> shape = {});
  void put(const std::string& name, std::vector<std::uint64_t> data,
           std::vector<std::uint64_t> shape = {});
  void put(const std::string& name, std::vector<std::int32_t> data,
           std::vector<std::uint64_t> shape = {});
  void put(const std::string& name, std::vector<std::string> data);
  void put_scalar(const std::string& name, const std::string& value) { put(name, std::vector{value}); }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const std::vector<std::uint64_t>& shape(const std::string& name) const;

  std::vector<double> get_f64(const std::string& name) const;
  std::vector<float> get_f32(const std::string& name) const;
  std::vector<std::int64_t> get_i64(const std::string& name) const;
  std::vector<std::uint64_t> get_u64(const std::string& name) const;
  std::vector<std::int32_t> get_i32(const std::string& name) const;
  std::vector<std::string> get_str(const std::string& name) const;
  std::string get_scalar(const std::string& name) const;

  std::vector<std::string> names() const;

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

 private:
  struct Entry {
    DType dtype;
    std::vector<std::uint64_t> shape;
    std::vector<char> bytes;  // raw payload, strings pre-encoded
  };
  const Entry& entry(const std::string& name, DType expected) const;

  std::map<std::string, Entry> entries_;
};

}  // namespace triage
