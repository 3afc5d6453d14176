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

// Umbrella header.

#pragma once

#include "offlang/checkpoint.hpp"
#include "offlang/classifier.hpp"
#include "offlang/corpus.hpp"
#include "offlang/encoder.hpp"
#include "offlang/errors.hpp"
#include "offlang/experiment.hpp"
#include "offlang/metrics.hpp"
#include "offlang/mini_encoder.hpp"
#include "offlang/reporting.hpp"
#include "offlang/rng.hpp"
#include "offlang/synthetic.hpp"
#include "offlang/tensor.hpp"
#include "offlang/text.hpp"
#include "offlang/tokenizer.hpp"
#include "offlang/train.hpp"
#include "offlang/types.hpp"
