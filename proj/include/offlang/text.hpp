// Copyright 2026 The offlang Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#if defined(OFFLANG_HAVE_ICU)
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#endif

namespace offlang {

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && is_ascii_space(s[b])) ++b;
  std::size_t e = s.size();
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_ascii_space(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '\t') {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

// Strict UTF-8 validation: rejects overlong forms, surrogates and
// codepoints above U+10FFFF.
inline bool utf8_valid(std::string_view s) {
  std::size_t i = 0;
  const auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0u) == 0x80u;
  };
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80u) {
      i += 1;
    } else if ((c & 0xE0u) == 0xC0u) {
      if (c < 0xC2u || !cont(1)) return false;
      i += 2;
    } else if ((c & 0xF0u) == 0xE0u) {
      if (!cont(1) || !cont(2)) return false;
      const unsigned char c1 = static_cast<unsigned char>(s[i + 1]);
      if (c == 0xE0u && c1 < 0xA0u) return false;  // overlong
      if (c == 0xEDu && c1 > 0x9Fu) return false;  // surrogate
      i += 3;
    } else if ((c & 0xF8u) == 0xF0u) {
      if (c > 0xF4u || !cont(1) || !cont(2) || !cont(3)) return false;
      const unsigned char c1 = static_cast<unsigned char>(s[i + 1]);
      if (c == 0xF0u && c1 < 0x90u) return false;  // overlong
      if (c == 0xF4u && c1 > 0x8Fu) return false;  // > U+10FFFF
      i += 4;
    } else {
      return false;
    }
  }
  return true;
}

// Unicode NFC normalization. Identity fallback when built without ICU.
inline std::string nfc_normalize(std::string_view s) {
#if defined(OFFLANG_HAVE_ICU)
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || nfc == nullptr) return std::string(s);
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  icu::UnicodeString out = nfc->normalize(in, status);
  if (U_FAILURE(status)) return std::string(s);
  std::string result;
  out.toUTF8String(result);
  return result;
#else
  return std::string(s);
#endif
}

inline bool nfc_available() {
#if defined(OFFLANG_HAVE_ICU)
  return true;
#else
  return false;
#endif
}

// Lowercasing for the optional corpus flag.
inline std::string to_lower(std::string_view s) {
#if defined(OFFLANG_HAVE_ICU)
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower();
  std::string result;
  u.toUTF8String(result);
  return result;
#else
  std::string result(s);
  for (char& c : result) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return result;
#endif
}

}  // namespace offlang
