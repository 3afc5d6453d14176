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

// Synthetic bilingual corpora for desk-scale transfer experiments. Each
// "language" has a disjoint base lexicon (token_prefix + index); a small
// set of marker tokens is shared verbatim across languages and carries the
// label signal, mirroring how offense cues survive cross-lingual encoders:
//   binary task:  offensive     <=> one or more markers present
//   ternary task: non aggressive = 0 markers, covert = 1, overt = 2+
// A model that learns to spot markers in one language transfers to the
// other; a from-scratch model has to rediscover them from a handful of
// target instances.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offlang/rng.hpp"
#include "offlang/types.hpp"

namespace offlang {

struct SyntheticConfig {
  std::string language = "xx";     // dataset language tag
  std::string token_prefix = "xx"; // base-lexicon prefix (per language)
  std::size_t instances = 100;
  std::size_t lexicon_size = 200;
  std::size_t num_markers = 12;    // shared marker inventory "mk0".."mkN-1"
  std::uint64_t seed = 1;
};

inline LabelScheme offense_binary_scheme() {
  return {"offense-binary", {"offensive", "non-offensive"}};
}

inline LabelScheme aggression_ternary_scheme() {
  return {"aggression-ternary",
          {"overtly aggressive", "covertly aggressive", "non aggressive"}};
}

namespace detail {

inline std::string synth_text(Rng& rng, const SyntheticConfig& cfg,
                              std::size_t marker_count) {
  const std::size_t base_len = 6 + rng.below(7);
  std::vector<std::string> toks;
  toks.reserve(base_len + marker_count);
  for (std::size_t t = 0; t < base_len; ++t) {
    toks.push_back(cfg.token_prefix +
                   std::to_string(rng.below(cfg.lexicon_size)));
  }
  for (std::size_t m = 0; m < marker_count; ++m) {
    toks.push_back("mk" + std::to_string(rng.below(cfg.num_markers)));
  }
  rng.shuffle(toks);
  std::string text;
  for (std::size_t t = 0; t < toks.size(); ++t) {
    if (t) text += ' ';
    text += toks[t];
  }
  return text;
}

}  // namespace detail

// Binary offensive/non-offensive corpus; labels roughly balanced.
inline Dataset synthetic_offense_binary(const SyntheticConfig& cfg) {
  Dataset d;
  d.scheme = offense_binary_scheme();
  d.source = "synthetic";
  d.language = cfg.language;
  Rng rng(mix_seed(cfg.seed, 0x5B2ull));
  for (std::size_t i = 0; i < cfg.instances; ++i) {
    const std::size_t label = rng.below(2);  // 0 = offensive
    const std::size_t markers = label == 0 ? 1 + rng.below(3) : 0;
    LabeledInstance inst;
    inst.id = cfg.language + "-" + std::to_string(i);
    inst.text = detail::synth_text(rng, cfg, markers);
    inst.label = label;
    d.instances.push_back(std::move(inst));
  }
  d.validate();
  return d;
}

// Three-way aggression corpus over the same shared markers.
inline Dataset synthetic_aggression_ternary(const SyntheticConfig& cfg) {
  Dataset d;
  d.scheme = aggression_ternary_scheme();
  d.source = "synthetic";
  d.language = cfg.language;
  Rng rng(mix_seed(cfg.seed, 0x3A9ull));
  for (std::size_t i = 0; i < cfg.instances; ++i) {
    const std::size_t label = rng.below(3);
    // 0 = overt (2+ markers), 1 = covert (exactly 1), 2 = non (none)
    std::size_t markers = 0;
    if (label == 0) markers = 2 + rng.below(2);
    if (label == 1) markers = 1;
    LabeledInstance inst;
    inst.id = cfg.language + "-" + std::to_string(i);
    inst.text = detail::synth_text(rng, cfg, markers);
    inst.label = label;
    d.instances.push_back(std::move(inst));
  }
  d.validate();
  return d;
}

}  // namespace offlang
