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

#include "triage/textprep/clean.hpp"

#include <array>
#include <cctype>
#include <cstdint>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

namespace triage::textprep {

namespace {

constexpr std::array<std::string_view, 4> kPlaceholders = {"<num>", "<guid>", "<url>", "<hex>"};

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}

bool is_hex(char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); }

bool is_base64(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '+' || c == '/' || c == '=';
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  }
  return true;
}

// Markup tags become a blank; placeholders survive.
std::string strip_tags(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '<') {
      std::size_t plen = 0;
      if (match_placeholder(s.substr(i), plen)) {
        out.append(s.substr(i, plen));
        i += plen - 1;
        continue;
      }
      if (i + 1 < s.size()) {
        const auto next = static_cast<unsigned char>(s[i + 1]);
        if (std::isalpha(next) || next == '/' || next == '!' || next == '?') {
          const auto close = s.find('>', i + 1);
          const auto reopen = s.find('<', i + 1);
          if (close != std::string_view::npos && (reopen == std::string_view::npos || reopen > close)) {
            out += ' ';
            i = close;
            continue;
          }
        }
      }
    }
    out += s[i];
  }
  return out;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// One decoding pass; entity names match case-insensitively.
std::string decode_entities_once(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, char>, 6> kNamed = {{
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}, {"&nbsp;", ' '}}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    bool done = false;
    for (const auto& [name, ch] : kNamed) {
      if (starts_with_ci(s, i, name)) {
        out += ch;
        i += name.size() - 1;
        done = true;
        break;
      }
    }
    if (done) continue;
    if (i + 2 < s.size() && s[i + 1] == '#') {
      std::size_t j = i + 2;
      const bool hex = j < s.size() && (s[j] == 'x' || s[j] == 'X');
      if (hex) ++j;
      const std::size_t digits_begin = j;
      std::uint64_t cp = 0;
      while (j < s.size() && j - digits_begin < 8 &&
             (hex ? std::isxdigit(static_cast<unsigned char>(s[j])) != 0
                  : std::isdigit(static_cast<unsigned char>(s[j])) != 0)) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[j])));
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
        ++j;
      }
      if (j > digits_begin && j < s.size() && s[j] == ';' && cp > 0 && cp <= 0x10FFFF &&
          !(cp >= 0xD800 && cp <= 0xDFFF)) {
        append_utf8(out, static_cast<std::uint32_t>(cp));
        i = j;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

std::string decode_entities(std::string_view s) {
  std::string cur(s);
  for (int pass = 0; pass < 16; ++pass) {
    auto next = decode_entities_once(cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

// Brackets that are not part of a placeholder, and control bytes, become blanks.
std::string drop_stray(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto u = static_cast<unsigned char>(s[i]);
    if (s[i] == '<') {
      std::size_t plen = 0;
      if (match_placeholder(s.substr(i), plen)) {
        out.append(s.substr(i, plen));
        i += plen - 1;
      } else {
        out += ' ';
      }
    } else if (s[i] == '>' || (u < 0x20 && s[i] != '\n') || u == 0x7F) {
      out += ' ';
    } else {
      out += s[i];
    }
  }
  return out;
}

// Removes data URIs and long whitespace-free base64 runs.
std::string drop_blobs(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[i]))) {
      out += s[i++];
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    const auto word = s.substr(i, j - i);
    bool blob = starts_with_ci(s, i, "data:") && word.find(";base64,") != std::string_view::npos;
    if (!blob && word.size() >= 64) {
      blob = true;
      for (char c : word) {
        if (!is_base64(c)) {
          blob = false;
          break;
        }
      }
    }
    if (blob) {
      out += ' ';
    } else {
      out.append(word);
    }
    i = j;
  }
  return out;
}

std::string lower_nfc(const std::string& s) {
  bool ascii = true;
  for (char c : s) {
    if (static_cast<unsigned char>(c) >= 0x80) {
      ascii = false;
      break;
    }
  }
  if (ascii) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(s);
  u.toLower(icu::Locale::getRoot());
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  icu::UnicodeString normalized = U_SUCCESS(status) ? nfc->normalize(u, status) : u;
  if (U_FAILURE(status)) normalized = u;
  normalized.findAndReplace(icu::UnicodeString(static_cast<UChar32>(0xFFFD)), icu::UnicodeString(" "));
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

// Placeholders count as word characters so a second pass sees the same
// boundaries as the first.
bool ends_with_placeholder(std::string_view s, std::size_t end) {
  for (auto p : kPlaceholders) {
    if (end >= p.size() && s.substr(end - p.size(), p.size()) == p) return true;
  }
  return false;
}

bool left_boundary(std::string_view s, std::size_t i) {
  return i == 0 || (!is_word_byte(s[i - 1]) && !ends_with_placeholder(s, i));
}

bool right_boundary(std::string_view s, std::size_t j) {
  std::size_t plen = 0;
  return j >= s.size() || (!is_word_byte(s[j]) && !match_placeholder(s.substr(j), plen));
}

std::size_t match_url(std::string_view s, std::size_t i) {
  if (!left_boundary(s, i)) return 0;
  std::size_t prefix = 0;
  for (std::string_view p : {"https://", "http://", "ftp://", "www."}) {
    if (s.substr(i, p.size()) == p) {
      prefix = p.size();
      break;
    }
  }
  if (prefix == 0) return 0;
  std::size_t j = i + prefix;
  while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '"' &&
         s[j] != '\'' && s[j] != '<' && s[j] != '>') {
    ++j;
  }
  while (j > i + prefix && std::string_view(".,;:!?)]").find(s[j - 1]) != std::string_view::npos) --j;
  return j > i + prefix ? j - i : 0;
}

std::size_t match_guid(std::string_view s, std::size_t i) {
  if (!left_boundary(s, i)) return 0;
  std::size_t j = i;
  for (int group : {8, 4, 4, 4, 12}) {
    if (j != i) {
      if (j >= s.size() || s[j] != '-') return 0;
      ++j;
    }
    for (int k = 0; k < group; ++k, ++j) {
      if (j >= s.size() || !is_hex(s[j])) return 0;
    }
  }
  return right_boundary(s, j) ? j - i : 0;
}

std::size_t match_hex(std::string_view s, std::size_t i) {
  if (!left_boundary(s, i)) return 0;
  if (s.substr(i, 2) == "0x") {
    std::size_t j = i + 2;
    while (j < s.size() && is_hex(s[j])) ++j;
    if (j > i + 2 && right_boundary(s, j)) return j - i;
  }
  std::size_t j = i;
  bool digit = false;
  bool letter = false;
  while (j < s.size() && is_hex(s[j])) {
    (std::isdigit(static_cast<unsigned char>(s[j])) ? digit : letter) = true;
    ++j;
  }
  return (j - i >= 8 && digit && letter && right_boundary(s, j)) ? j - i : 0;
}

std::size_t match_number(std::string_view s, std::size_t i) {
  std::size_t j = i;
  while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  if (j == i) return 0;
  if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
    ++j;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  }
  return j - i;
}

std::string replace_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    std::size_t plen = 0;
    if (s[i] == '<' && match_placeholder(s.substr(i), plen)) {
      out.append(s.substr(i, plen));
      i += plen;
      continue;
    }
    if (auto n = match_url(s, i)) {
      out += "<url>";
      i += n;
    } else if (auto g = match_guid(s, i)) {
      out += "<guid>";
      i += g;
    } else if (auto h = match_hex(s, i)) {
      out += "<hex>";
      i += h;
    } else if (auto d = match_number(s, i)) {
      out += "<num>";
      i += d;
    } else {
      out += s[i++];
    }
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  bool pending_newline = false;
  for (char c : s) {
    if (c == '\n') {
      pending_newline = true;
      pending_space = false;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!pending_newline) pending_space = true;
    } else {
      if (!out.empty()) {
        if (pending_newline) {
          out += '\n';
        } else if (pending_space) {
          out += ' ';
        }
      }
      pending_space = pending_newline = false;
      out += c;
    }
  }
  return out;
}

}  // namespace

bool match_placeholder(std::string_view text, std::size_t& len) {
  for (auto p : kPlaceholders) {
    if (text.substr(0, p.size()) == p) {
      len = p.size();
      return true;
    }
  }
  return false;
}

std::string clean_text(std::string_view raw) {
  if (raw.empty()) return {};
  std::string s = strip_tags(raw);
  s = decode_entities(s);
  s = drop_stray(s);
  s = drop_blobs(s);
  s = lower_nfc(s);
  s = replace_entities(s);
  return collapse_whitespace(s);
}

}  // namespace triage::textprep
