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

// The sequence-encoder contract: token sequence in, CLS hidden state out.
// Everything downstream (classifier head, evaluation, prediction) compiles
// against the sequence_encoder concept only, so a pretrained cross-lingual
// encoder adapter is drop-in interchangeable with the mini encoder.

#pragma once

#include <concepts>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "offlang/tokenizer.hpp"

namespace offlang {

struct EncoderConfig {
  std::uint32_t vocab_size = 4096;
  std::uint32_t hidden_size = 16;
  std::uint32_t num_layers = 2;
  std::uint32_t num_heads = 2;
  std::uint32_t feed_forward_size = 64;
  std::uint32_t max_len = 64;  // also sizes the positional table
  std::uint64_t tokenizer_seed = 1;

  void validate() const {
    if (vocab_size < kNumReservedIds + 1) {
      throw std::invalid_argument("encoder config: vocab_size too small");
    }
    if (hidden_size == 0 || num_layers == 0 || num_heads == 0 ||
        feed_forward_size == 0) {
      throw std::invalid_argument(
          "encoder config: all dimensions must be positive");
    }
    if (hidden_size % num_heads != 0) {
      throw std::invalid_argument(
          "encoder config: hidden_size must be divisible by num_heads");
    }
    if (max_len < 2) {
      throw std::invalid_argument("encoder config: max_len must be >= 2");
    }
  }

  bool operator==(const EncoderConfig&) const = default;
};

// Pure function of the architecture config; stored in checkpoints and
// re-verified on load to catch silent shape drift or tampering.
inline std::string encoder_fingerprint(const EncoderConfig& c) {
  std::ostringstream canon;
  canon << "v" << c.vocab_size << ":h" << c.hidden_size << ":l" << c.num_layers
        << ":a" << c.num_heads << ":f" << c.feed_forward_size << ":m"
        << c.max_len << ":t" << c.tokenizer_seed;
  const std::uint64_t h = fnv1a64(canon.str(), 0xcbf29ce484222325ull);
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = digits[(h >> (4 * i)) & 0xF];
  return out;
}

// Inference contract. T is the activation scalar type.
template <class E, class T>
concept sequence_encoder =
    requires(const E& e, const TokenSequence& toks, std::string_view text) {
      { e.hidden_size() } -> std::convertible_to<std::size_t>;
      { e.tokenize(text) } -> std::same_as<TokenSequence>;
      { e.encode(toks) } -> std::same_as<std::vector<T>>;
    };

}  // namespace offlang
