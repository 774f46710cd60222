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

#include "triage/common/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "triage/common/error.hpp"

namespace triage {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little-endian hosts");

namespace {

constexpr char kMagic[8] = {'T', 'R', 'I', 'A', 'G', 'E', 'A', 'R'};

template <typename T>
std::vector<char> to_bytes(const std::vector<T>& v) {
  std::vector<char> bytes(v.size() * sizeof(T));
  if (!v.empty()) std::memcpy(bytes.data(), v.data(), bytes.size());
  return bytes;
}

template <typename T>
std::vector<T> from_bytes(const std::vector<char>& bytes) {
  std::vector<T> v(bytes.size() / sizeof(T));
  if (!v.empty()) std::memcpy(v.data(), bytes.data(), v.size() * sizeof(T));
  return v;
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("archive truncated");
  return value;
}

std::size_t dtype_size(Archive::DType d) {
  switch (d) {
    case Archive::DType::kF64:
    case Archive::DType::kI64:
    case Archive::DType::kU64: return 8;
    case Archive::DType::kF32:
    case Archive::DType::kI32: return 4;
    case Archive::DType::kStr: return 0;
  }
  return 0;
}

std::vector<std::uint64_t> default_shape(std::vector<std::uint64_t> shape, std::size_t n) {
  if (shape.empty()) return {n};
  const auto product = std::accumulate(shape.begin(), shape.end(), std::uint64_t{1},
                                       std::multiplies<std::uint64_t>());
  if (product != n) throw ConfigError("archive shape does not match element count");
  return shape;
}

}  // namespace

void Archive::put(const std::string& name, std::vector<double> data, std::vector<std::uint64_t> shape) {
  entries_[name] = {DType::kF64, default_shape(std::move(shape), data.size()), to_bytes(data)};
}
void Archive::put(const std::string& name, std::vector<float> data, std::vector<std::uint64_t> shape) {
  entries_[name] = {DType::kF32, default_shape(std::move(shape), data.size()), to_bytes(data)};
}
void Archive::put(const std::string& name, std::vector<std::int64_t> data,
                  std::vector<std::uint64_t> shape) {
  entries_[name] = {DType::kI64, default_shape(std::move(shape), data.size()), to_bytes(data)};
}
void Archive::put(const std::string& name, std::vector<std::uint64_t> data,
                  std::vector<std::uint64_t> shape) {
  entries_[name] = {DType::kU64, default_shape(std::move(shape), data.size()), to_bytes(data)};
}
void Archive::put(const std::string& name, std::vector<std::int32_t> data,
                  std::vector<std::uint64_t> shape) {
  entries_[name] = {DType::kI32, default_shape(std::move(shape), data.size()), to_bytes(data)};
}

void Archive::put(const std::string& name, std::vector<std::string> data) {
  std::vector<char> bytes;
  for (const auto& s : data) {
    const auto len = static_cast<std::uint32_t>(s.size());
    const char* p = reinterpret_cast<const char*>(&len);
    bytes.insert(bytes.end(), p, p + sizeof(len));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  entries_[name] = {DType::kStr, {data.size()}, std::move(bytes)};
}

const Archive::Entry& Archive::entry(const std::string& name, DType expected) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("archive has no entry '" + name + "'");
  if (it->second.dtype != expected) throw ValidationError("archive entry '" + name + "' has wrong dtype");
  return it->second;
}

const std::vector<std::uint64_t>& Archive::shape(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("archive has no entry '" + name + "'");
  return it->second.shape;
}

std::vector<double> Archive::get_f64(const std::string& n) const { return from_bytes<double>(entry(n, DType::kF64).bytes); }
std::vector<float> Archive::get_f32(const std::string& n) const { return from_bytes<float>(entry(n, DType::kF32).bytes); }
std::vector<std::int64_t> Archive::get_i64(const std::string& n) const {
  return from_bytes<std::int64_t>(entry(n, DType::kI64).bytes);
}
std::vector<std::uint64_t> Archive::get_u64(const std::string& n) const {
  return from_bytes<std::uint64_t>(entry(n, DType::kU64).bytes);
}
std::vector<std::int32_t> Archive::get_i32(const std::string& n) const {
  return from_bytes<std::int32_t>(entry(n, DType::kI32).bytes);
}

std::vector<std::string> Archive::get_str(const std::string& name) const {
  const auto& e = entry(name, DType::kStr);
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (std::uint64_t i = 0; i < e.shape.at(0); ++i) {
    std::uint32_t len = 0;
    if (pos + sizeof(len) > e.bytes.size()) throw ValidationError("archive string table truncated");
    std::memcpy(&len, e.bytes.data() + pos, sizeof(len));
    pos += sizeof(len);
    if (pos + len > e.bytes.size()) throw ValidationError("archive string table truncated");
    out.emplace_back(e.bytes.data() + pos, len);
    pos += len;
  }
  return out;
}

std::string Archive::get_scalar(const std::string& name) const {
  auto v = get_str(name);
  if (v.size() != 1) throw ValidationError("archive entry '" + name + "' is not a scalar");
  return v.front();
}

std::vector<std::string> Archive::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

void Archive::save(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kFormatVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, e] : entries_) {
      write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
      write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
      for (auto d : e.shape) write_pod<std::uint64_t>(out, d);
      if (e.dtype == DType::kStr) write_pod<std::uint64_t>(out, e.bytes.size());
      out.write(e.bytes.data(), static_cast<std::streamsize>(e.bytes.size()));
    }
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError(path.string() + ": not a triage archive");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw ValidationError(path.string() + ": unsupported archive version " + std::to_string(version));
  }
  Archive ar;
  const auto count = read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    Entry e;
    e.dtype = static_cast<DType>(read_pod<std::uint8_t>(in));
    const auto rank = read_pod<std::uint32_t>(in);
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      e.shape.push_back(read_pod<std::uint64_t>(in));
      n *= e.shape.back();
    }
    const std::uint64_t nbytes =
        e.dtype == DType::kStr ? read_pod<std::uint64_t>(in) : n * dtype_size(e.dtype);
    e.bytes.resize(nbytes);
    in.read(e.bytes.data(), static_cast<std::streamsize>(nbytes));
    if (!in) throw ValidationError(path.string() + ": archive truncated");
    ar.entries_[name] = std::move(e);
  }
  return ar;
}

}  // namespace triage
