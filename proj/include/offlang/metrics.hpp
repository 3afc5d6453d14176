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

// Confusion matrices and the F1 family used by the offensive-language
// shared tasks: per-class P/R/F1, macro F1 (unweighted class mean) and
// weighted F1 (gold-support-weighted mean).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offlang/errors.hpp"
#include "offlang/types.hpp"

namespace offlang {

struct ConfusionMatrix {
  LabelScheme scheme;
  std::vector<std::int64_t> counts;  // k*k, rows = gold, cols = predicted

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(LabelScheme s)
      : scheme(std::move(s)),
        counts(scheme.num_classes() * scheme.num_classes(), 0) {}

  std::size_t k() const { return scheme.num_classes(); }

  std::int64_t& at(std::size_t gold, std::size_t pred) {
    return counts[gold * k() + pred];
  }
  std::int64_t at(std::size_t gold, std::size_t pred) const {
    return counts[gold * k() + pred];
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (std::int64_t c : counts) t += c;
    return t;
  }

  std::int64_t gold_support(std::size_t c) const {
    std::int64_t t = 0;
    for (std::size_t p = 0; p < k(); ++p) t += at(c, p);
    return t;
  }

  std::int64_t pred_support(std::size_t c) const {
    std::int64_t t = 0;
    for (std::size_t g = 0; g < k(); ++g) t += at(g, c);
    return t;
  }
};

inline ConfusionMatrix confusion(const std::vector<std::size_t>& gold,
                                 const std::vector<std::size_t>& pred,
                                 const LabelScheme& scheme) {
  if (gold.size() != pred.size()) {
    throw data_error("confusion: gold and prediction lists differ in length (" +
                     std::to_string(gold.size()) + " vs " +
                     std::to_string(pred.size()) + ")");
  }
  scheme.validate();
  ConfusionMatrix m(scheme);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= m.k() || pred[i] >= m.k()) {
      throw data_error("confusion: label out of range at position " +
                       std::to_string(i));
    }
    ++m.at(gold[i], pred[i]);
  }
  return m;
}

struct ClassScores {
  std::string class_name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;  // gold support
};

// Zero-support convention: P, R and F1 are all 0 whenever their
// denominators are 0. A class with neither gold nor predicted instances
// therefore contributes F1 = 0 to the macro mean.
inline std::vector<ClassScores> per_class_scores(const ConfusionMatrix& m) {
  std::vector<ClassScores> out(m.k());
  for (std::size_t c = 0; c < m.k(); ++c) {
    const double tp = static_cast<double>(m.at(c, c));
    const double gold = static_cast<double>(m.gold_support(c));
    const double pred = static_cast<double>(m.pred_support(c));
    ClassScores& s = out[c];
    s.class_name = m.scheme.classes[c];
    s.support = m.gold_support(c);
    s.precision = pred > 0.0 ? tp / pred : 0.0;
    s.recall = gold > 0.0 ? tp / gold : 0.0;
    const double pr = s.precision + s.recall;
    s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
  }
  return out;
}

inline double macro_f1(const ConfusionMatrix& m) {
  const std::vector<ClassScores> scores = per_class_scores(m);
  double sum = 0.0;
  for (const ClassScores& s : scores) sum += s.f1;
  return sum / static_cast<double>(m.k());
}

inline double weighted_f1(const ConfusionMatrix& m) {
  const std::int64_t total = m.total();
  if (total == 0) return 0.0;
  const std::vector<ClassScores> scores = per_class_scores(m);
  double sum = 0.0;
  for (const ClassScores& s : scores) {
    sum += static_cast<double>(s.support) * s.f1;
  }
  return sum / static_cast<double>(total);
}

struct EvaluationReport {
  std::string model_label;
  std::string language;
  ConfusionMatrix matrix;
  std::vector<ClassScores> per_class;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::size_t instance_count = 0;
  std::vector<std::string> warnings;
};

inline EvaluationReport make_report(std::string model_label,
                                    std::string language,
                                    const std::vector<std::size_t>& gold,
                                    const std::vector<std::size_t>& pred,
                                    const LabelScheme& scheme) {
  EvaluationReport r;
  r.model_label = std::move(model_label);
  r.language = std::move(language);
  r.matrix = confusion(gold, pred, scheme);
  r.per_class = per_class_scores(r.matrix);
  r.macro_f1 = macro_f1(r.matrix);
  r.weighted_f1 = weighted_f1(r.matrix);
  r.instance_count = gold.size();
  if (gold.empty()) {
    r.warnings.push_back("empty evaluation set: all scores defined as 0");
  }
  return r;
}

}  // namespace offlang
