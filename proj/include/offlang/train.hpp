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

// Joint fine-tuning loop: encoder and softmax head are updated together
// by mini-batch gradient descent on the negative log-likelihood. Fully
// deterministic given (initial model, data, config seed); single-threaded
// with respect to parameter state.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "offlang/classifier.hpp"
#include "offlang/corpus.hpp"
#include "offlang/errors.hpp"
#include "offlang/metrics.hpp"
#include "offlang/mini_encoder.hpp"
#include "offlang/rng.hpp"

namespace offlang {

enum class OptimizerKind {
  adam,  // default; configured only by learning rate
  sgd,   // plain gradient descent, kept for gradient-check style tests
};

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw config_error("unknown optimizer '" + s + "' (expected adam|sgd)");
}

inline std::string optimizer_to_string(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "sgd";
}

struct TrainConfig {
  double learning_rate = 1e-5;
  std::uint32_t epochs = 3;
  std::uint32_t batch_size = 8;
  std::uint64_t seed = 1;
  double split_ratio = 0.8;
  OptimizerKind optimizer = OptimizerKind::adam;
  // Train on the whole dataset instead of its training split; validation
  // metrics then fall back to the training set.
  bool use_full_dataset = false;

  void validate() const {
    // 0 is tolerated (a no-op run, useful for reproducibility checks);
    // negative or non-finite rates are rejected.
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw config_error("train config: learning_rate must be >= 0");
    }
    if (epochs < 1) throw config_error("train config: epochs must be >= 1");
    if (batch_size < 1) {
      throw config_error("train config: batch_size must be >= 1");
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
      throw config_error("train config: split_ratio must be in (0, 1)");
    }
  }

  bool operator==(const TrainConfig&) const = default;
};

struct EpochStats {
  std::uint32_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
  double wall_time_s = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;

  double final_val_macro_f1() const {
    return epochs.empty() ? 0.0 : epochs.back().val_macro_f1;
  }
  std::uint32_t best_val_epoch() const {
    std::uint32_t best = 0;
    for (const EpochStats& e : epochs) {
      if (best == 0 || e.val_macro_f1 > epochs[best - 1].val_macro_f1) {
        best = e.epoch;
      }
    }
    return best;
  }
};

inline void write_history_jsonl(const TrainHistory& h, std::ostream& out) {
  for (const EpochStats& e : h.epochs) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["val_macro_f1"] = e.val_macro_f1;
    j["wall_time_s"] = e.wall_time_s;
    out << j.dump() << "\n";
  }
}

inline TrainHistory read_history_jsonl(std::istream& in) {
  TrainHistory h;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      EpochStats e;
      e.epoch = j.at("epoch").get<std::uint32_t>();
      e.train_loss = j.at("train_loss").get<double>();
      e.val_macro_f1 = j.at("val_macro_f1").get<double>();
      e.wall_time_s = j.at("wall_time_s").get<double>();
      h.epochs.push_back(e);
    } catch (const nlohmann::json::exception& ex) {
      throw data_error("history line " + std::to_string(line_no) + ": " +
                       ex.what());
    }
  }
  return h;
}

// Reproducibility comparisons exclude wall time, which is the one
// timestamp-like field in a history.
inline bool history_equal_ignoring_time(const TrainHistory& a,
                                        const TrainHistory& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    if (a.epochs[i].epoch != b.epochs[i].epoch) return false;
    if (a.epochs[i].train_loss != b.epochs[i].train_loss) return false;
    if (a.epochs[i].val_macro_f1 != b.epochs[i].val_macro_f1) return false;
  }
  return true;
}

namespace detail {

// Parameter/gradient slot pairs in the canonical traversal order:
// encoder tensors first, then head weight, then head bias.
template <class T>
struct ParamSlots {
  std::vector<std::vector<T>*> params;
  std::vector<std::vector<T>*> grads;
};

template <class T>
ParamSlots<T> collect_slots(ClassifierModel<T>& model, MiniEncoder<T>& enc_grad,
                            Mat<T>& head_w_grad, std::vector<T>& head_b_grad) {
  ParamSlots<T> s;
  model.encoder.for_each_param(
      [&](const std::string&, const std::vector<std::size_t>&,
          std::vector<T>& data) { s.params.push_back(&data); });
  enc_grad.for_each_param(
      [&](const std::string&, const std::vector<std::size_t>&,
          std::vector<T>& data) { s.grads.push_back(&data); });
  s.params.push_back(&model.head.weight.a);
  s.grads.push_back(&head_w_grad.a);
  if (model.head.has_bias()) {
    s.params.push_back(&model.head.bias);
    s.grads.push_back(&head_b_grad);
  }
  return s;
}

// Adam with standard moment decay (0.9 / 0.999), bias correction and
// eps 1e-8; only the learning rate is exposed. Moments are kept in
// double; parameters round-trip through double exactly, so a zero
// learning rate leaves them bitwise unchanged.
template <class T>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr) : lr_(lr) {}

  void step(ParamSlots<T>& slots) {
    if (m_.empty()) {
      m_.resize(slots.params.size());
      v_.resize(slots.params.size());
      for (std::size_t i = 0; i < slots.params.size(); ++i) {
        m_[i].assign(slots.params[i]->size(), 0.0);
        v_[i].assign(slots.params[i]->size(), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t_));
    for (std::size_t i = 0; i < slots.params.size(); ++i) {
      std::vector<T>& p = *slots.params[i];
      const std::vector<T>& g = *slots.grads[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = static_cast<double>(g[j]);
        m_[i][j] = 0.9 * m_[i][j] + 0.1 * gj;
        v_[i][j] = 0.999 * v_[i][j] + 0.001 * gj * gj;
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        p[j] = static_cast<T>(static_cast<double>(p[j]) -
                              lr_ * mhat / (std::sqrt(vhat) + 1e-8));
      }
    }
  }

 private:
  double lr_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

template <class T>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(double lr) : lr_(lr) {}

  void step(ParamSlots<T>& slots) {
    for (std::size_t i = 0; i < slots.params.size(); ++i) {
      std::vector<T>& p = *slots.params[i];
      const std::vector<T>& g = *slots.grads[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        p[j] = static_cast<T>(static_cast<double>(p[j]) -
                              lr_ * static_cast<double>(g[j]));
      }
    }
  }

 private:
  double lr_;
};

}  // namespace detail

template <class T, class Enc>
  requires sequence_encoder<Enc, T>
double dataset_macro_f1(const ClassifierModel<T, Enc>& model,
                        const Dataset& data) {
  std::vector<std::size_t> gold, pred;
  gold.reserve(data.size());
  pred.reserve(data.size());
  for (const LabeledInstance& inst : data.instances) {
    gold.push_back(inst.label);
    pred.push_back(predict(model, inst.text));
  }
  return macro_f1(confusion(gold, pred, data.scheme));
}

// One full fine-tuning run. The input model is not mutated; the returned
// model carries the final epoch's weights (per-epoch validation macro F1
// is in the history for re-selection).
template <class T>
std::pair<ClassifierModel<T>, TrainHistory> train(
    const ClassifierModel<T>& initial, const Dataset& data,
    const TrainConfig& cfg) {
  cfg.validate();
  initial.validate();
  data.validate();
  if (initial.scheme != data.scheme) {
    throw data_error("train: dataset scheme '" + data.scheme.name +
                     "' does not match model scheme '" + initial.scheme.name +
                     "'");
  }

  Dataset train_set, val_set;
  if (cfg.use_full_dataset) {
    train_set = data;
    val_set = data;
  } else {
    auto parts = split_dataset(data, cfg.split_ratio, cfg.seed);
    train_set = std::move(parts.first);
    val_set = std::move(parts.second);
  }
  if (train_set.instances.empty()) {
    throw data_error("train: training split is empty (dataset too small for "
                     "split_ratio)");
  }

  ClassifierModel<T> model = initial;
  const std::size_t n = train_set.size();
  const std::size_t H = model.encoder.hidden_size();
  const std::size_t k = model.scheme.num_classes();

  std::vector<TokenSequence> tokens;
  tokens.reserve(n);
  for (const LabeledInstance& inst : train_set.instances) {
    tokens.push_back(model.encoder.tokenize(inst.text));
  }

  MiniEncoder<T> enc_grad = MiniEncoder<T>::zeros_like(model.encoder);
  Mat<T> head_w_grad(k, H);
  std::vector<T> head_b_grad(model.head.has_bias() ? k : 0, T{});
  detail::ParamSlots<T> slots =
      detail::collect_slots(model, enc_grad, head_w_grad, head_b_grad);

  detail::AdamOptimizer<T> adam(cfg.learning_rate);
  detail::SgdOptimizer<T> sgd(cfg.learning_rate);

  Rng order_rng(mix_seed(cfg.seed, 0x0DE4ull));
  TrainHistory history;

  for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::size_t> perm = order_rng.permutation(n);
    double loss_sum = 0.0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      for (std::vector<T>* g : slots.grads) g->assign(g->size(), T{});

      for (std::size_t bi = start; bi < stop; ++bi) {
        const std::size_t idx = perm[bi];
        const LabeledInstance& inst = train_set.instances[idx];

        typename MiniEncoder<T>::ForwardCache cache;
        const std::vector<T> h = model.encoder.forward(tokens[idx], cache);
        const std::vector<double> proba =
            softmax(class_logits(model, h));
        const double loss = nll_loss(proba, inst.label);
        if (!std::isfinite(loss)) {
          throw std::runtime_error(
              "train: non-finite loss at epoch " + std::to_string(epoch) +
              ", instance '" + inst.id + "', aborting");
        }
        loss_sum += loss;

        // d(loss)/d(logit_c) = p_c - [c == gold]
        std::vector<T> d_logits(k);
        for (std::size_t c = 0; c < k; ++c) {
          d_logits[c] = static_cast<T>(proba[c] -
                                       (c == inst.label ? 1.0 : 0.0));
        }
        std::vector<T> d_h(H, T{});
        for (std::size_t c = 0; c < k; ++c) {
          const T dc = d_logits[c];
          T* gw = head_w_grad.row(c);
          const T* wrow = model.head.weight.row(c);
          for (std::size_t j = 0; j < H; ++j) {
            gw[j] += dc * h[j];
            d_h[j] += dc * wrow[j];
          }
          if (model.head.has_bias()) head_b_grad[c] += dc;
        }
        model.encoder.backward(cache, d_h, enc_grad);
      }

      const T inv = static_cast<T>(1.0 / static_cast<double>(stop - start));
      for (std::vector<T>* g : slots.grads) {
        for (T& v : *g) v *= inv;
        if (!all_finite(*g)) {
          throw std::runtime_error("train: non-finite gradient at epoch " +
                                   std::to_string(epoch) + ", aborting");
        }
      }

      if (cfg.optimizer == OptimizerKind::adam) {
        adam.step(slots);
      } else {
        sgd.step(slots);
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.val_macro_f1 = dataset_macro_f1(model, val_set);
    stats.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    history.epochs.push_back(stats);
  }

  return {std::move(model), std::move(history)};
}

}  // namespace offlang
