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
#include <stdexcept>
#include <string_view>
#include <vector>

#include "offlang/text.hpp"

namespace offlang {

inline constexpr std::uint32_t kPadId = 0;
inline constexpr std::uint32_t kClsId = 1;
inline constexpr std::uint32_t kUnkId = 2;
inline constexpr std::uint32_t kNumReservedIds = 3;

// Token id sequence. The first id is always the CLS marker; length is
// capped by the tokenizer's max_len.
struct TokenSequence {
  std::vector<std::uint32_t> ids;

  std::size_t size() const { return ids.size(); }
  bool operator==(const TokenSequence&) const = default;
};

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Desk-scale tokenizer: whitespace splitting plus a seeded hash into a
// fixed vocabulary. Identical surface tokens map to identical ids across
// languages, which is exactly the shared-marker behaviour the synthetic
// transfer corpora rely on. Pretrained adapters bring their own subword
// tokenizers behind the same TokenSequence contract.
class HashTokenizer {
 public:
  HashTokenizer(std::uint32_t vocab_size, std::uint64_t seed)
      : vocab_(vocab_size), basis_(0xcbf29ce484222325ull ^ mix(seed)) {
    if (vocab_size < kNumReservedIds + 1) {
      throw std::invalid_argument(
          "HashTokenizer: vocab_size must exceed the reserved ids");
    }
  }

  std::uint32_t vocab_size() const { return vocab_; }

  std::uint32_t token_id(std::string_view token) const {
    return kNumReservedIds +
           static_cast<std::uint32_t>(fnv1a64(token, basis_) %
                                      (vocab_ - kNumReservedIds));
  }

  // CLS first, then hashed whitespace tokens; sequences longer than
  // max_len are truncated at the tail (head-keeping convention).
  TokenSequence tokenize(std::string_view text,
                         std::size_t max_len = 512) const {
    if (max_len < 2) {
      throw std::invalid_argument("tokenize: max_len must be at least 2");
    }
    TokenSequence seq;
    seq.ids.reserve(16);
    seq.ids.push_back(kClsId);
    for (std::string_view tok : split_whitespace(text)) {
      if (seq.ids.size() >= max_len) break;
      seq.ids.push_back(token_id(tok));
    }
    return seq;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint32_t vocab_;
  std::uint64_t basis_;
};

}  // namespace offlang
