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

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "offlang/errors.hpp"
#include "offlang/experiment.hpp"

namespace offlang::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitCheckpointError = 4;

inline void print_error(const std::string& category, const std::string& msg,
                        std::ostream& err) {
  nlohmann::json j;
  j["error"]["category"] = category;
  j["error"]["message"] = msg;
  err << j.dump() << std::endl;
}

inline void print_artifacts(const RunArtifacts& artifacts, std::ostream& out) {
  out << "run directory: " << artifacts.run_dir.string() << "\n";
  for (const auto& f : artifacts.files) out << "  " << f.string() << "\n";
  for (const auto& [name, value] : artifacts.metrics) {
    out << name << ": " << value << "\n";
  }
}

// Parses argv, loads the config, applies --set overrides, dispatches the
// subcommand. Exit codes: 0 ok, 2 config, 3 data, 4 checkpoint, 1 other.
inline int run(int argc, const char* const* argv, std::istream& in = std::cin,
               std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{
      "offlang: cross-lingual offensive-language classification with "
      "transfer learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "offlang 0.1.0");

  struct SubArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_root;
    std::string input;  // predict only
  };

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train", "fine-tune a classifier from scratch on a dataset"},
      {"transfer", "initialize from a source checkpoint, then fine-tune"},
      {"evaluate", "score a checkpoint on a labeled dataset"},
      {"predict", "label lines from stdin or a file"},
      {"baseline", "majority-class baseline report"},
      {"report", "comparison table across run directories"}};

  std::map<std::string, SubArgs> args;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    SubArgs& a = args[name];
    sub->add_option("-c,--config", a.config_path, "experiment config JSON")
        ->required();
    sub->add_option("--set", a.overrides,
                    "override a config leaf, e.g. --set train.epochs=5");
    sub->add_option("-o,--output-root", a.output_root,
                    "override the output root directory");
    if (name == "predict") {
      sub->add_option("-i,--input", a.input,
                      "input file ('-' for stdin; overrides config)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    // --help / --version land here with code 0
    return code == 0 ? kExitOk : kExitConfigError;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const SubArgs& a = args[name];

  try {
    nlohmann::json j = load_config_json(a.config_path);
    for (const std::string& ov : a.overrides) apply_override(j, ov);
    if (!a.output_root.empty()) j["output_root"] = a.output_root;
    if (name == "predict" && !a.input.empty()) j["predict"]["input"] = a.input;
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);

    switch (command_from_string(name)) {
      case Command::train:
        print_artifacts(run_train(cfg), out);
        break;
      case Command::transfer:
        print_artifacts(run_transfer(cfg), out);
        break;
      case Command::evaluate:
        print_artifacts(run_evaluate(cfg), out);
        break;
      case Command::predict: {
        if (cfg.predict_input == "-") {
          run_predict(cfg, in, out);
        } else {
          std::ifstream file(cfg.predict_input);
          if (!file) {
            throw data_error("cannot open input '" + cfg.predict_input + "'");
          }
          run_predict(cfg, file, out);
        }
        break;
      }
      case Command::baseline:
        print_artifacts(run_baseline(cfg), out);
        break;
      case Command::report:
        print_artifacts(run_report(cfg, out), out);
        break;
    }
    return kExitOk;
  } catch (const config_error& e) {
    print_error("config", e.what(), err);
    return kExitConfigError;
  } catch (const data_error& e) {
    print_error("data", e.what(), err);
    return kExitDataError;
  } catch (const checkpoint_error& e) {
    print_error("checkpoint", e.what(), err);
    return kExitCheckpointError;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), err);
    return kExitFailure;
  }
}

}  // namespace offlang::cli
