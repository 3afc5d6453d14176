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

// Declarative experiment configs and the runners behind the CLI commands.
// One command = one run directory (config snapshot, checkpoint, history,
// reports), staged and atomically renamed on completion so reruns always
// leave either the old or the new artifacts, never a mix.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "offlang/checkpoint.hpp"
#include "offlang/classifier.hpp"
#include "offlang/corpus.hpp"
#include "offlang/errors.hpp"
#include "offlang/mini_encoder.hpp"
#include "offlang/reporting.hpp"
#include "offlang/train.hpp"

namespace offlang {

enum class Command { train, transfer, evaluate, predict, baseline, report };

inline Command command_from_string(const std::string& s) {
  if (s == "train") return Command::train;
  if (s == "transfer") return Command::transfer;
  if (s == "evaluate") return Command::evaluate;
  if (s == "predict") return Command::predict;
  if (s == "baseline") return Command::baseline;
  if (s == "report") return Command::report;
  throw config_error("unknown command '" + s + "'");
}

enum class TransferStrategy { full, encoder_only };

inline TransferStrategy transfer_strategy_from_string(const std::string& s) {
  if (s == "full") return TransferStrategy::full;
  if (s == "encoder_only") return TransferStrategy::encoder_only;
  throw config_error("transfer strategy must be 'full' or 'encoder_only', got '" +
                     s + "'");
}

inline std::string transfer_strategy_to_string(TransferStrategy s) {
  return s == TransferStrategy::full ? "full" : "encoder_only";
}

struct DataRef {
  std::string path;
  std::string profile;
};

struct TransferSpec {
  std::string source_checkpoint;
  TransferStrategy strategy = TransferStrategy::full;
  std::map<std::string, std::string> class_map;  // source class -> target class
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string run_name = "run";
  std::string output_root;  // empty: $OFFLANG_OUTPUT_ROOT, then "runs"

  std::optional<DataRef> train_data;
  std::optional<DataRef> eval_data;
  std::string profiles_registry;  // empty: builtin registry
  bool lowercase = false;

  std::string encoder_kind = "mini";
  EncoderConfig encoder;
  std::string adapter_reference;
  bool head_bias = true;

  TrainConfig train;
  std::optional<TransferSpec> transfer;

  std::string evaluate_checkpoint;
  std::string predict_checkpoint;
  std::string predict_input = "-";

  std::vector<std::string> report_runs;
  std::string references_path;  // empty: builtin reference rows

  nlohmann::json raw;  // effective JSON, snapshotted into the run dir

  static ExperimentConfig from_json(const nlohmann::json& j);

  std::filesystem::path resolved_output_root() const {
    if (!output_root.empty()) return output_root;
    if (const char* env = std::getenv("OFFLANG_OUTPUT_ROOT")) {
      if (*env) return env;
    }
    return "runs";
  }

  ProfileRegistry load_registry() const {
    return profiles_registry.empty() ? ProfileRegistry::builtin()
                                     : ProfileRegistry::load(profiles_registry);
  }
};

namespace detail {

inline DataRef data_ref_from_json(const nlohmann::json& j) {
  DataRef d;
  d.path = j.at("path").get<std::string>();
  d.profile = j.at("profile").get<std::string>();
  return d;
}

template <class T>
void maybe_get(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.raw = j;
  try {
    detail::maybe_get(j, "seed", c.seed);
    detail::maybe_get(j, "run_name", c.run_name);
    detail::maybe_get(j, "output_root", c.output_root);

    if (j.contains("data")) {
      const auto& d = j.at("data");
      if (d.contains("train")) c.train_data = detail::data_ref_from_json(d.at("train"));
      if (d.contains("eval")) c.eval_data = detail::data_ref_from_json(d.at("eval"));
      detail::maybe_get(d, "profiles_registry", c.profiles_registry);
      detail::maybe_get(d, "lowercase", c.lowercase);
    }

    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      detail::maybe_get(e, "kind", c.encoder_kind);
      detail::maybe_get(e, "vocab_size", c.encoder.vocab_size);
      detail::maybe_get(e, "hidden_size", c.encoder.hidden_size);
      detail::maybe_get(e, "num_layers", c.encoder.num_layers);
      detail::maybe_get(e, "num_heads", c.encoder.num_heads);
      detail::maybe_get(e, "feed_forward_size", c.encoder.feed_forward_size);
      detail::maybe_get(e, "max_len", c.encoder.max_len);
      detail::maybe_get(e, "tokenizer_seed", c.encoder.tokenizer_seed);
      detail::maybe_get(e, "adapter_reference", c.adapter_reference);
    }

    if (j.contains("head")) {
      detail::maybe_get(j.at("head"), "bias", c.head_bias);
    }

    c.train.seed = c.seed;  // default: the experiment seed drives training
    if (j.contains("train")) {
      const auto& t = j.at("train");
      detail::maybe_get(t, "learning_rate", c.train.learning_rate);
      detail::maybe_get(t, "epochs", c.train.epochs);
      detail::maybe_get(t, "batch_size", c.train.batch_size);
      detail::maybe_get(t, "seed", c.train.seed);
      detail::maybe_get(t, "split_ratio", c.train.split_ratio);
      if (t.contains("optimizer")) {
        c.train.optimizer =
            optimizer_from_string(t.at("optimizer").get<std::string>());
      }
      detail::maybe_get(t, "use_full_dataset", c.train.use_full_dataset);
    }

    if (j.contains("transfer")) {
      const auto& t = j.at("transfer");
      TransferSpec spec;
      spec.source_checkpoint = t.at("source_checkpoint").get<std::string>();
      spec.strategy =
          transfer_strategy_from_string(t.at("strategy").get<std::string>());
      if (t.contains("class_map")) {
        for (const auto& [k, v] : t.at("class_map").items()) {
          spec.class_map[k] = v.get<std::string>();
        }
      }
      c.transfer = std::move(spec);
    }

    if (j.contains("evaluate")) {
      detail::maybe_get(j.at("evaluate"), "checkpoint", c.evaluate_checkpoint);
    }
    if (j.contains("predict")) {
      detail::maybe_get(j.at("predict"), "checkpoint", c.predict_checkpoint);
      detail::maybe_get(j.at("predict"), "input", c.predict_input);
    }
    if (j.contains("report")) {
      detail::maybe_get(j.at("report"), "runs", c.report_runs);
      detail::maybe_get(j.at("report"), "references", c.references_path);
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("experiment config: ") + e.what());
  }
  return c;
}

inline nlohmann::json load_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config '" + path.string() + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config '" + path.string() + "': " + e.what());
  }
}

// Dotted-path override: "train.learning_rate=0.001". The value is parsed
// as JSON when possible, otherwise taken as a string.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw config_error("override must look like key.path=value, got '" +
                       assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    parsed = value;  // bare strings are fine
  }

  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) {
      throw config_error("override path has an empty segment: '" + path + "'");
    }
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

namespace detail {

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) {
    throw config_error(std::string("config: missing ") + what);
  }
  if (!std::filesystem::exists(path)) {
    throw config_error(std::string("config: ") + what + " '" + path +
                       "' does not exist");
  }
}

}  // namespace detail

// Pre-flight validation: required blocks present, referenced paths exist,
// and for full-strategy transfers the source head exists with a matching
// class count. All of this runs before any training or output.
inline void validate_config(const ExperimentConfig& c, Command cmd) {
  if (c.run_name.empty()) throw config_error("config: run_name is empty");
  if (!c.profiles_registry.empty()) {
    detail::require_file(c.profiles_registry, "profiles registry");
  }
  if (!c.references_path.empty()) {
    detail::require_file(c.references_path, "references file");
  }

  const bool trains = cmd == Command::train || cmd == Command::transfer;
  if (trains) {
    if (c.encoder_kind == "adapter") {
      throw config_error(
          "config: adapter encoders are inference-only in this build; "
          "training requires encoder.kind = 'mini'");
    }
    if (c.encoder_kind != "mini") {
      throw config_error("config: unknown encoder kind '" + c.encoder_kind +
                         "'");
    }
    try {
      c.encoder.validate();
    } catch (const std::exception& e) {
      throw config_error(std::string("config: ") + e.what());
    }
    c.train.validate();
    if (!c.train_data) throw config_error("config: missing data.train block");
    detail::require_file(c.train_data->path, "training dataset");
  }

  switch (cmd) {
    case Command::train:
      break;
    case Command::transfer: {
      if (!c.transfer) throw config_error("config: missing transfer block");
      detail::require_file(c.transfer->source_checkpoint, "source checkpoint");
      // Structural compatibility is checked here, before any training:
      // full transfer needs a stored head whose class count matches the
      // target task.
      const ProfileRegistry reg = c.load_registry();
      const DatasetProfile& target = reg.get(c.train_data->profile);
      const Checkpoint ckpt =
          read_checkpoint_file(c.transfer->source_checkpoint, true);
      if (c.transfer->strategy == TransferStrategy::full) {
        if (!ckpt.has_head) {
          throw checkpoint_error(
              "transfer strategy 'full' needs a checkpoint with a head; '" +
              c.transfer->source_checkpoint + "' is encoder-only");
        }
        if (ckpt.head_scheme.num_classes() != target.scheme.num_classes()) {
          throw checkpoint_error(
              "transfer strategy 'full': source head has " +
              std::to_string(ckpt.head_scheme.num_classes()) +
              " classes but target profile '" + target.name + "' has " +
              std::to_string(target.scheme.num_classes()) +
              "; use strategy 'encoder_only' for differing class counts");
        }
      }
      break;
    }
    case Command::evaluate:
      if (!c.eval_data) throw config_error("config: missing data.eval block");
      detail::require_file(c.eval_data->path, "evaluation dataset");
      detail::require_file(c.evaluate_checkpoint, "evaluate.checkpoint");
      break;
    case Command::predict:
      detail::require_file(c.predict_checkpoint, "predict.checkpoint");
      if (c.predict_input != "-") {
        detail::require_file(c.predict_input, "predict.input");
      }
      break;
    case Command::baseline:
      if (!c.train_data) throw config_error("config: missing data.train block");
      if (!c.eval_data) throw config_error("config: missing data.eval block");
      detail::require_file(c.train_data->path, "training dataset");
      detail::require_file(c.eval_data->path, "evaluation dataset");
      break;
    case Command::report:
      if (c.report_runs.empty()) {
        throw config_error("config: report.runs must list run directories");
      }
      for (const std::string& run : c.report_runs) {
        detail::require_file(run, "report run directory");
        detail::require_file((std::filesystem::path(run) / "report.json").string(),
                             "run report.json");
      }
      break;
  }
}

struct RunArtifacts {
  std::filesystem::path run_dir;
  std::vector<std::filesystem::path> files;
  // Command-specific summary values for the caller to print.
  std::map<std::string, double> metrics;
};

namespace detail {

class RunDirectory {
 public:
  RunDirectory(const std::filesystem::path& root, const std::string& name)
      : final_(root / name), staging_(root / (".staging-" + name)) {
    std::filesystem::create_directories(root);
    std::filesystem::remove_all(staging_);
    std::filesystem::create_directories(staging_);
  }

  ~RunDirectory() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove_all(staging_, ec);
    }
  }

  const std::filesystem::path& staging() const { return staging_; }

  std::filesystem::path commit() {
    std::filesystem::remove_all(final_);
    std::filesystem::rename(staging_, final_);
    committed_ = true;
    return final_;
  }

 private:
  std::filesystem::path final_, staging_;
  bool committed_ = false;
};

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw data_error("cannot write '" + path.string() + "'");
  out << content;
}

inline void write_config_snapshot(const ExperimentConfig& cfg,
                                  const std::filesystem::path& dir) {
  write_text_file(dir / "config.json", cfg.raw.dump(2) + "\n");
}

inline ClassifierModel<float> fresh_model(const ExperimentConfig& cfg,
                                          const LabelScheme& scheme) {
  ClassifierModel<float> model;
  model.encoder = MiniEncoder<float>::init(cfg.encoder, cfg.seed);
  model.head = HeadState<float>::init(scheme.num_classes(),
                                      model.encoder.hidden_size(),
                                      mix_seed(cfg.seed, 0xC1A55ull),
                                      cfg.head_bias);
  model.scheme = scheme;
  return model;
}

inline EvaluationReport evaluate_model(const ClassifierModel<float>& model,
                                       const Dataset& data,
                                       const std::string& label) {
  std::vector<std::size_t> gold, pred;
  gold.reserve(data.size());
  pred.reserve(data.size());
  for (const LabeledInstance& inst : data.instances) {
    gold.push_back(inst.label);
    pred.push_back(predict(model, inst.text));
  }
  return make_report(label, data.language, gold, pred, data.scheme);
}

inline std::vector<ReferenceRow> load_reference_rows(
    const ExperimentConfig& cfg) {
  return cfg.references_path.empty() ? builtin_references()
                                     : load_references(cfg.references_path);
}

inline void emit_report_artifacts(const EvaluationReport& report,
                                  const ExperimentConfig& cfg,
                                  const std::filesystem::path& dir,
                                  RunArtifacts& artifacts) {
  write_report_json(report, dir / "report.json");
  emit_heatmap(report.matrix, dir / "confusion.csv", dir / "heatmap.bmp");

  const std::vector<ReferenceRow> refs = load_reference_rows(cfg);
  const std::vector<ComparisonRow> rows =
      build_comparison(report.language, {report}, refs);
  write_text_file(dir / "comparison.txt",
                  format_comparison_text(report.language, rows));
  std::ostringstream csv;
  write_comparison_csv(report.language, rows, csv);
  write_text_file(dir / "comparison.csv", csv.str());

  artifacts.files = {dir / "report.json", dir / "confusion.csv",
                     dir / "heatmap.bmp", dir / "comparison.txt",
                     dir / "comparison.csv"};
  artifacts.metrics["macro_f1"] = report.macro_f1;
  artifacts.metrics["weighted_f1"] = report.weighted_f1;
}

// Shared tail of train/transfer: fine-tune, then persist checkpoint,
// history and the config snapshot.
inline RunArtifacts finish_training_run(const ExperimentConfig& cfg,
                                        const ClassifierModel<float>& model,
                                        const Dataset& data,
                                        const std::string& source_label) {
  const auto [trained, history] = train(model, data, cfg.train);

  RunDirectory rd(cfg.resolved_output_root(), cfg.run_name);
  write_config_snapshot(cfg, rd.staging());

  Provenance prov;
  prov.source_dataset = source_label;
  prov.train_config = cfg.train;
  prov.seed = cfg.seed;
  const Checkpoint ckpt = export_checkpoint(trained, true, prov);
  write_checkpoint_file(rd.staging() / "model.ckpt", ckpt);

  std::ostringstream hist_stream;
  write_history_jsonl(history, hist_stream);
  write_text_file(rd.staging() / "history.jsonl", hist_stream.str());

  RunArtifacts artifacts;
  artifacts.run_dir = rd.commit();
  artifacts.files = {artifacts.run_dir / "config.json",
                     artifacts.run_dir / "model.ckpt",
                     artifacts.run_dir / "history.jsonl"};
  artifacts.metrics["final_val_macro_f1"] = history.final_val_macro_f1();
  artifacts.metrics["best_val_epoch"] = history.best_val_epoch();
  if (!history.epochs.empty()) {
    artifacts.metrics["final_train_loss"] = history.epochs.back().train_loss;
  }
  return artifacts;
}

}  // namespace detail

inline RunArtifacts run_train(const ExperimentConfig& cfg) {
  validate_config(cfg, Command::train);
  const ProfileRegistry reg = cfg.load_registry();
  const DatasetProfile& profile = reg.get(cfg.train_data->profile);
  const Dataset data =
      load_dataset(cfg.train_data->path, profile, {cfg.lowercase});
  const ClassifierModel<float> model = detail::fresh_model(cfg, profile.scheme);
  return detail::finish_training_run(cfg, model, data, profile.name);
}

inline RunArtifacts run_transfer(const ExperimentConfig& cfg) {
  validate_config(cfg, Command::transfer);
  const ProfileRegistry reg = cfg.load_registry();
  const DatasetProfile& profile = reg.get(cfg.train_data->profile);
  const Dataset data =
      load_dataset(cfg.train_data->path, profile, {cfg.lowercase});

  ClassifierModel<float> model;
  if (cfg.transfer->strategy == TransferStrategy::full) {
    const Checkpoint ckpt = read_checkpoint_file(cfg.transfer->source_checkpoint);
    model = remap_head_scheme(import_full(ckpt), profile.scheme,
                              cfg.transfer->class_map);
  } else {
    // Head bytes are skipped entirely; only the encoder is restored.
    const Checkpoint ckpt =
        read_checkpoint_file(cfg.transfer->source_checkpoint, true);
    model = import_encoder_only(ckpt, profile.scheme,
                                mix_seed(cfg.seed, 0xC1A55ull), cfg.head_bias);
  }

  const std::string source_label =
      profile.name + " (transfer:" +
      transfer_strategy_to_string(cfg.transfer->strategy) + " from " +
      cfg.transfer->source_checkpoint + ")";
  return detail::finish_training_run(cfg, model, data, source_label);
}

inline RunArtifacts run_evaluate(const ExperimentConfig& cfg) {
  validate_config(cfg, Command::evaluate);
  const ProfileRegistry reg = cfg.load_registry();
  const DatasetProfile& profile = reg.get(cfg.eval_data->profile);
  const Dataset data =
      load_dataset(cfg.eval_data->path, profile, {cfg.lowercase});

  ClassifierModel<float> model =
      import_full(read_checkpoint_file(cfg.evaluate_checkpoint));
  if (model.scheme.num_classes() != data.scheme.num_classes()) {
    throw data_error("evaluate: checkpoint head has " +
                     std::to_string(model.scheme.num_classes()) +
                     " classes but dataset scheme '" + data.scheme.name +
                     "' has " + std::to_string(data.scheme.num_classes()));
  }
  EvaluationReport report;
  {
    const bool renamed = model.scheme != data.scheme;
    model.scheme = data.scheme;  // report under the dataset's class names
    report = detail::evaluate_model(model, data, cfg.run_name);
    if (renamed) {
      report.warnings.push_back(
          "checkpoint scheme differed from dataset scheme; classes matched "
          "positionally");
    }
  }

  detail::RunDirectory rd(cfg.resolved_output_root(), cfg.run_name);
  detail::write_config_snapshot(cfg, rd.staging());
  RunArtifacts artifacts;
  detail::emit_report_artifacts(report, cfg, rd.staging(), artifacts);
  artifacts.run_dir = rd.commit();
  for (auto& f : artifacts.files) {
    f = artifacts.run_dir / f.filename();
  }
  return artifacts;
}

inline RunArtifacts run_baseline(const ExperimentConfig& cfg) {
  validate_config(cfg, Command::baseline);
  const ProfileRegistry reg = cfg.load_registry();
  const Dataset train_set = load_dataset(
      cfg.train_data->path, reg.get(cfg.train_data->profile), {cfg.lowercase});
  const Dataset eval_set = load_dataset(
      cfg.eval_data->path, reg.get(cfg.eval_data->profile), {cfg.lowercase});

  const EvaluationReport report = majority_baseline(train_set, eval_set);

  detail::RunDirectory rd(cfg.resolved_output_root(), cfg.run_name);
  detail::write_config_snapshot(cfg, rd.staging());
  RunArtifacts artifacts;
  detail::emit_report_artifacts(report, cfg, rd.staging(), artifacts);
  artifacts.run_dir = rd.commit();
  for (auto& f : artifacts.files) {
    f = artifacts.run_dir / f.filename();
  }
  return artifacts;
}

// Per-line prediction: "<label>\t<p(class0)>\t<p(class1)>..." for every
// input line (stdin when predict.input is "-").
inline int run_predict(const ExperimentConfig& cfg, std::istream& in,
                       std::ostream& out) {
  validate_config(cfg, Command::predict);
  const ClassifierModel<float> model =
      import_full(read_checkpoint_file(cfg.predict_checkpoint));

  std::string line;
  while (std::getline(in, line)) {
    const std::vector<double> proba = predict_proba(model, line);
    const std::size_t label = argmax_tie_low(proba);
    out << model.scheme.classes[label];
    out << std::fixed << std::setprecision(6);
    for (double p : proba) out << "\t" << p;
    out.unsetf(std::ios_base::floatfield);
    out << "\n";
  }
  return 0;
}

// Cross-run comparison: one table section per language, computed rows
// from each run's report.json interleaved with the reference systems.
inline RunArtifacts run_report(const ExperimentConfig& cfg,
                               std::ostream& table_out) {
  validate_config(cfg, Command::report);
  std::vector<EvaluationReport> reports;
  for (const std::string& run : cfg.report_runs) {
    reports.push_back(
        read_report_json(std::filesystem::path(run) / "report.json"));
  }
  std::vector<std::string> languages;
  for (const EvaluationReport& r : reports) {
    bool seen = false;
    for (const std::string& l : languages) seen = seen || l == r.language;
    if (!seen) languages.push_back(r.language);
  }
  const std::vector<ReferenceRow> refs = detail::load_reference_rows(cfg);

  std::string text;
  std::ostringstream csv;
  csv << "language,model,macro_f1,weighted_f1,reference\n";
  for (const std::string& lang : languages) {
    std::vector<EvaluationReport> section;
    for (const EvaluationReport& r : reports) {
      if (r.language == lang) section.push_back(r);
    }
    const std::vector<ComparisonRow> rows =
        build_comparison(lang, section, refs);
    text += format_comparison_text(lang, rows);
    text += "\n";
    for (const ComparisonRow& r : rows) {
      csv << lang << ",\"" << r.label << "\"," << format_score(r.macro_f1)
          << "," << format_score(r.weighted_f1) << ","
          << (r.is_reference ? "yes" : "no") << "\n";
    }
  }
  table_out << text;

  detail::RunDirectory rd(cfg.resolved_output_root(), cfg.run_name);
  detail::write_config_snapshot(cfg, rd.staging());
  detail::write_text_file(rd.staging() / "comparison.txt", text);
  detail::write_text_file(rd.staging() / "comparison.csv", csv.str());

  RunArtifacts artifacts;
  artifacts.run_dir = rd.commit();
  artifacts.files = {artifacts.run_dir / "comparison.txt",
                     artifacts.run_dir / "comparison.csv"};
  return artifacts;
}

}  // namespace offlang
