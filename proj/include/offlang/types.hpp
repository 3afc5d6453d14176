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

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "offlang/errors.hpp"
#include "offlang/text.hpp"

namespace offlang {

// Ordered set of class names defining a task. Class index = position in
// the list; the order is fixed and persisted through checkpoints.
struct LabelScheme {
  std::string name;
  std::vector<std::string> classes;

  std::size_t num_classes() const { return classes.size(); }

  std::optional<std::size_t> index_of(std::string_view cls) const {
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] == cls) return i;
    }
    return std::nullopt;
  }

  void validate() const {
    if (name.empty()) throw data_error("label scheme: empty name");
    if (classes.size() < 2) {
      throw data_error("label scheme '" + name + "': needs at least 2 classes");
    }
    std::unordered_set<std::string> seen;
    for (const std::string& c : classes) {
      if (c.empty())
        throw data_error("label scheme '" + name + "': empty class name");
      if (!seen.insert(c).second) {
        throw data_error("label scheme '" + name + "': duplicate class '" + c +
                         "'");
      }
    }
  }

  bool operator==(const LabelScheme&) const = default;
};

struct LabeledInstance {
  std::string id;
  std::string text;       // non-empty after whitespace trimming
  std::size_t label = 0;  // index into the owning dataset's scheme
};

struct Dataset {
  LabelScheme scheme;
  std::vector<LabeledInstance> instances;
  std::string source;    // "twitter" | "facebook" | "synthetic"
  std::string language;  // BCP-47-ish tag: "en", "hi", "es", "bn", ...

  std::size_t size() const { return instances.size(); }

  void validate() const {
    scheme.validate();
    std::unordered_set<std::string> ids;
    ids.reserve(instances.size());
    for (const LabeledInstance& inst : instances) {
      if (inst.label >= scheme.num_classes()) {
        throw data_error("instance '" + inst.id + "': label index " +
                         std::to_string(inst.label) + " out of range for '" +
                         scheme.name + "'");
      }
      if (trim(inst.text).empty()) {
        throw data_error("instance '" + inst.id + "': empty text");
      }
      if (!ids.insert(inst.id).second) {
        throw data_error("duplicate instance id '" + inst.id + "'");
      }
    }
  }
};

}  // namespace offlang
