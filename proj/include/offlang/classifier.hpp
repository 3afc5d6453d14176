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

// Softmax classification head over the CLS representation:
// p(c|h) = softmax(W h + b), trained by minimizing the negative
// log-probability of the gold label. The bias term is optional (off for
// literal W-only heads).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "offlang/encoder.hpp"
#include "offlang/errors.hpp"
#include "offlang/mini_encoder.hpp"
#include "offlang/rng.hpp"
#include "offlang/tensor.hpp"
#include "offlang/types.hpp"

namespace offlang {

inline constexpr double kLogFloor = 1e-12;

template <class T = float>
struct HeadState {
  Mat<T> weight;        // k x H
  std::vector<T> bias;  // length k; empty means no bias term

  bool has_bias() const { return !bias.empty(); }

  static HeadState init(std::size_t num_classes, std::size_t hidden_size,
                        std::uint64_t seed, bool with_bias = true) {
    if (num_classes < 2 || hidden_size == 0) {
      throw std::invalid_argument("head init: bad dimensions");
    }
    HeadState h;
    h.weight = Mat<T>(num_classes, hidden_size);
    Rng rng(mix_seed(seed, 0x4EADull));
    for (T& v : h.weight.a) v = static_cast<T>(rng.normal(0.0, 0.02));
    if (with_bias) h.bias.assign(num_classes, T{});
    return h;
  }

  void validate(std::size_t num_classes, std::size_t hidden_size) const {
    if (weight.rows != num_classes || weight.cols != hidden_size) {
      throw std::invalid_argument("head: weight shape (" +
                                  std::to_string(weight.rows) + "x" +
                                  std::to_string(weight.cols) +
                                  ") does not match classes x hidden (" +
                                  std::to_string(num_classes) + "x" +
                                  std::to_string(hidden_size) + ")");
    }
    if (has_bias() && bias.size() != num_classes) {
      throw std::invalid_argument("head: bias length mismatch");
    }
  }
};

template <class T = float, class Enc = MiniEncoder<T>>
struct ClassifierModel {
  Enc encoder;
  HeadState<T> head;
  LabelScheme scheme;

  void validate() const {
    scheme.validate();
    head.validate(scheme.num_classes(), encoder.hidden_size());
  }
};

// Probability math runs in double regardless of the parameter scalar so
// that distributions sum to 1 within 1e-9 even for float32 models.
inline std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

inline std::size_t argmax_tie_low(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("argmax: empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;  // strict: ties keep the lower index
  }
  return best;
}

// -log p(gold), with an epsilon floor inside the log.
inline double nll_loss(const std::vector<double>& proba, std::size_t gold) {
  if (gold >= proba.size()) {
    throw std::invalid_argument("loss: gold label " + std::to_string(gold) +
                                " out of range for " +
                                std::to_string(proba.size()) + " classes");
  }
  return -std::log(std::max(proba[gold], kLogFloor));
}

template <class T, class Enc>
  requires sequence_encoder<Enc, T>
std::vector<double> class_logits(const ClassifierModel<T, Enc>& model,
                                 const std::vector<T>& h) {
  if (h.size() != model.head.weight.cols) {
    throw std::invalid_argument("class_logits: hidden size mismatch");
  }
  std::vector<double> logits(model.head.weight.rows, 0.0);
  for (std::size_t c = 0; c < model.head.weight.rows; ++c) {
    double s = model.head.has_bias()
                   ? static_cast<double>(model.head.bias[c])
                   : 0.0;
    const T* wrow = model.head.weight.row(c);
    for (std::size_t j = 0; j < h.size(); ++j) {
      s += static_cast<double>(wrow[j]) * static_cast<double>(h[j]);
    }
    logits[c] = s;
  }
  return logits;
}

template <class T, class Enc>
  requires sequence_encoder<Enc, T>
std::vector<double> predict_proba(const ClassifierModel<T, Enc>& model,
                                  std::string_view text) {
  model.validate();
  const std::vector<T> h = model.encoder.encode(model.encoder.tokenize(text));
  return softmax(class_logits(model, h));
}

template <class T, class Enc>
  requires sequence_encoder<Enc, T>
std::size_t predict(const ClassifierModel<T, Enc>& model,
                    std::string_view text) {
  return argmax_tie_low(predict_proba(model, text));
}

}  // namespace offlang
