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

#include <stdexcept>
#include <string>

namespace offlang {

// Error categories map 1:1 onto CLI exit codes (config=2, data=3,
// checkpoint=4). Anything else surfaces as a generic failure.

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class checkpoint_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace offlang
