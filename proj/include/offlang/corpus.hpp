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

// Dataset profiles and loading for the shared-task corpora. Each profile
// maps one task's TSV layout (column positions, raw label vocabulary,
// header convention) onto the canonical id/text/label instance form.
// Users supply the files themselves under the tasks' licenses.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "offlang/errors.hpp"
#include "offlang/metrics.hpp"
#include "offlang/rng.hpp"
#include "offlang/text.hpp"
#include "offlang/types.hpp"

namespace offlang {

enum class HeaderRule {
  automatic,  // skip the first line iff its label cell is not a known label
  always,
  never,
};

struct DatasetProfile {
  std::string name;
  std::string language;
  std::string source;  // twitter | facebook
  LabelScheme scheme;
  std::map<std::string, std::string> labels;  // raw string -> class name
  std::size_t id_col = 0;
  std::size_t text_col = 1;
  std::size_t label_col = 2;
  HeaderRule header = HeaderRule::automatic;

  std::size_t min_columns() const {
    return std::max(id_col, std::max(text_col, label_col)) + 1;
  }

  std::size_t class_index(const std::string& raw) const {
    const auto it = labels.find(raw);
    if (it == labels.end()) {
      throw data_error("profile '" + name + "': unknown label '" + raw + "'");
    }
    const auto idx = scheme.index_of(it->second);
    if (!idx) {
      throw config_error("profile '" + name + "': label '" + raw +
                         "' maps to unknown class '" + it->second + "'");
    }
    return *idx;
  }

  // Raw label string for a class index; the label map is a bijection onto
  // the scheme, so this inverts class_index exactly.
  std::string raw_label(std::size_t index) const {
    for (const auto& [raw, cls] : labels) {
      const auto idx = scheme.index_of(cls);
      if (idx && *idx == index) return raw;
    }
    throw config_error("profile '" + name + "': no raw label for class index " +
                       std::to_string(index));
  }

  void validate() const {
    scheme.validate();
    if (labels.empty()) {
      throw config_error("profile '" + name + "': empty label vocabulary");
    }
    // The raw->class map must cover every class exactly once so that
    // loading followed by reverse-mapping reproduces the raw labels.
    std::vector<int> hits(scheme.num_classes(), 0);
    for (const auto& [raw, cls] : labels) {
      const auto idx = scheme.index_of(cls);
      if (!idx) {
        throw config_error("profile '" + name + "': label '" + raw +
                           "' maps to unknown class '" + cls + "'");
      }
      ++hits[*idx];
    }
    for (std::size_t c = 0; c < hits.size(); ++c) {
      if (hits[c] != 1) {
        throw config_error("profile '" + name + "': class '" +
                           scheme.classes[c] +
                           "' must have exactly one raw label");
      }
    }
  }
};

struct ProfileRegistry {
  int version = 0;
  std::map<std::string, DatasetProfile> profiles;

  const DatasetProfile& get(const std::string& name) const {
    const auto it = profiles.find(name);
    if (it == profiles.end()) {
      std::string known;
      for (const auto& [k, v] : profiles) {
        if (!known.empty()) known += ", ";
        known += k;
      }
      throw config_error("unknown dataset profile '" + name +
                         "' (known: " + known + ")");
    }
    return it->second;
  }

  // The four shared-task profiles this project targets. The shipped
  // resources/profiles.json carries the same registry; a test pins the
  // two in sync.
  static ProfileRegistry builtin() {
    ProfileRegistry reg;
    reg.version = 1;

    DatasetProfile olid;
    olid.name = "olid-en";
    olid.language = "en";
    olid.source = "twitter";
    olid.scheme = {"olid-offense", {"offensive", "non-offensive"}};
    olid.labels = {{"OFF", "offensive"}, {"NOT", "non-offensive"}};
    reg.profiles[olid.name] = olid;

    DatasetProfile hasoc;
    hasoc.name = "hasoc-hi";
    hasoc.language = "hi";
    hasoc.source = "twitter";
    hasoc.scheme = {"hasoc-hate", {"hate offensive", "non hate-offensive"}};
    hasoc.labels = {{"HOF", "hate offensive"}, {"NOT", "non hate-offensive"}};
    reg.profiles[hasoc.name] = hasoc;

    DatasetProfile hateval;
    hateval.name = "hateval-es";
    hateval.language = "es";
    hateval.source = "twitter";
    hateval.scheme = {"hateval-hate", {"hateful", "non-hateful"}};
    hateval.labels = {{"1", "hateful"}, {"0", "non-hateful"}};
    reg.profiles[hateval.name] = hateval;

    DatasetProfile trac;
    trac.name = "trac2-bn";
    trac.language = "bn";
    trac.source = "facebook";
    trac.scheme = {"trac2-aggression",
                   {"overtly aggressive", "covertly aggressive",
                    "non aggressive"}};
    trac.labels = {{"OAG", "overtly aggressive"},
                   {"CAG", "covertly aggressive"},
                   {"NAG", "non aggressive"}};
    reg.profiles[trac.name] = trac;

    for (const auto& [name, p] : reg.profiles) p.validate();
    return reg;
  }

  static ProfileRegistry from_json(const nlohmann::json& j);
  static ProfileRegistry load(const std::filesystem::path& path);
};

inline HeaderRule header_rule_from_string(const std::string& s) {
  if (s == "auto") return HeaderRule::automatic;
  if (s == "always") return HeaderRule::always;
  if (s == "never") return HeaderRule::never;
  throw config_error("profile registry: bad header rule '" + s + "'");
}

inline std::string header_rule_to_string(HeaderRule r) {
  switch (r) {
    case HeaderRule::automatic: return "auto";
    case HeaderRule::always: return "always";
    case HeaderRule::never: return "never";
  }
  return "auto";
}

inline ProfileRegistry ProfileRegistry::from_json(const nlohmann::json& j) {
  ProfileRegistry reg;
  try {
    reg.version = j.at("version").get<int>();
    for (const auto& [name, pj] : j.at("profiles").items()) {
      DatasetProfile p;
      p.name = name;
      p.language = pj.at("language").get<std::string>();
      p.source = pj.at("source").get<std::string>();
      p.scheme.name = pj.at("scheme").at("name").get<std::string>();
      p.scheme.classes =
          pj.at("scheme").at("classes").get<std::vector<std::string>>();
      for (const auto& [raw, cls] : pj.at("labels").items()) {
        p.labels[raw] = cls.get<std::string>();
      }
      const auto& cols = pj.at("columns");
      p.id_col = cols.at("id").get<std::size_t>();
      p.text_col = cols.at("text").get<std::size_t>();
      p.label_col = cols.at("label").get<std::size_t>();
      if (pj.contains("header")) {
        p.header = header_rule_from_string(pj.at("header").get<std::string>());
      }
      p.validate();
      reg.profiles[name] = std::move(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("profile registry: malformed JSON: ") +
                       e.what());
  }
  return reg;
}

inline ProfileRegistry ProfileRegistry::load(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw config_error("cannot open profile registry '" + path.string() + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("profile registry '" + path.string() +
                       "': " + e.what());
  }
  return from_json(j);
}

struct LoadOptions {
  bool lowercase = false;
};

// Loads a TSV file under a profile. Raw labels are mapped to scheme
// indices; unknown labels, short rows, invalid UTF-8, empty text and
// duplicate ids are hard errors naming the offending row (silently
// dropping rows would corrupt downstream F1 comparisons).
inline Dataset load_dataset(const std::filesystem::path& path,
                            const DatasetProfile& profile,
                            const LoadOptions& options = {}) {
  profile.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw data_error("cannot open dataset file '" + path.string() + "'");
  }

  Dataset d;
  d.scheme = profile.scheme;
  d.source = profile.source;
  d.language = profile.language;

  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;  // tolerate blank/trailing lines

    const bool is_first = first_content_line;
    first_content_line = false;
    if (is_first && profile.header == HeaderRule::always) continue;

    const std::vector<std::string_view> cells = split_tabs(line);
    if (cells.size() < profile.min_columns()) {
      if (is_first && profile.header == HeaderRule::automatic) continue;
      throw data_error("'" + path.string() + "' line " +
                       std::to_string(line_no) + ": expected at least " +
                       std::to_string(profile.min_columns()) +
                       " tab-separated columns, got " +
                       std::to_string(cells.size()));
    }

    const std::string raw_label(trim(cells[profile.label_col]));
    if (is_first && profile.header == HeaderRule::automatic &&
        profile.labels.find(raw_label) == profile.labels.end()) {
      continue;  // header line: label cell is not a known label string
    }

    LabeledInstance inst;
    inst.id = std::string(trim(cells[profile.id_col]));
    if (inst.id.empty()) {
      throw data_error("'" + path.string() + "' line " +
                       std::to_string(line_no) + ": empty id");
    }
    if (!seen_ids.insert(inst.id).second) {
      throw data_error("'" + path.string() + "' line " +
                       std::to_string(line_no) + ": duplicate id '" + inst.id +
                       "'");
    }

    const std::string_view raw_text = trim(cells[profile.text_col]);
    if (!utf8_valid(raw_text)) {
      throw data_error("row id '" + inst.id + "': invalid UTF-8 in text");
    }
    inst.text = nfc_normalize(raw_text);
    if (options.lowercase) inst.text = to_lower(inst.text);
    if (trim(inst.text).empty()) {
      throw data_error("row id '" + inst.id + "': empty text");
    }

    const auto lbl = profile.labels.find(raw_label);
    if (lbl == profile.labels.end()) {
      throw data_error("row id '" + inst.id + "': unknown label '" +
                       raw_label + "' for profile '" + profile.name + "'");
    }
    inst.label = profile.class_index(raw_label);
    d.instances.push_back(std::move(inst));
  }

  d.validate();
  return d;
}

inline Dataset load_dataset(const std::filesystem::path& path,
                            const std::string& profile_name,
                            const ProfileRegistry& registry,
                            const LoadOptions& options = {}) {
  return load_dataset(path, registry.get(profile_name), options);
}

// Seeded shuffle-then-cut split (not stratified). The partition is exact:
// train takes the first floor(ratio*n) of the permuted instances,
// validation the rest.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& d,
                                                 double ratio,
                                                 std::uint64_t seed) {
  if (d.instances.empty()) throw data_error("split_dataset: empty dataset");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("split_dataset: ratio must be in (0, 1)");
  }
  Rng rng(seed);
  const std::vector<std::size_t> perm = rng.permutation(d.instances.size());
  const std::size_t n_train = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(d.instances.size())));

  Dataset train, val;
  train.scheme = val.scheme = d.scheme;
  train.source = val.source = d.source;
  train.language = val.language = d.language;
  train.instances.reserve(n_train);
  val.instances.reserve(d.instances.size() - n_train);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    (i < n_train ? train : val).instances.push_back(d.instances[perm[i]]);
  }
  return {std::move(train), std::move(val)};
}

// Most frequent training label, ties broken toward the lower class index.
inline std::size_t majority_class(const Dataset& train) {
  std::vector<std::int64_t> counts(train.scheme.num_classes(), 0);
  for (const LabeledInstance& inst : train.instances) ++counts[inst.label];
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best;
}

inline EvaluationReport majority_baseline(const Dataset& train,
                                          const Dataset& eval) {
  if (train.scheme != eval.scheme) {
    throw data_error("majority_baseline: train scheme '" + train.scheme.name +
                     "' does not match eval scheme '" + eval.scheme.name + "'");
  }
  const std::size_t majority = majority_class(train);
  std::vector<std::size_t> gold, pred;
  gold.reserve(eval.size());
  pred.reserve(eval.size());
  for (const LabeledInstance& inst : eval.instances) {
    gold.push_back(inst.label);
    pred.push_back(majority);
  }
  return make_report("majority-baseline", eval.language, gold, pred,
                     eval.scheme);
}

}  // namespace offlang
