// Copyright 2026 The recdc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "recdc/condenser.h"
#include "recdc/config.h"
#include "recdc/dataset.h"
#include "recdc/errors.h"
#include "recdc/eval.h"
#include "recdc/evopro.h"
#include "recdc/file_io.h"
#include "recdc/llm.h"
#include "recdc/rec_model.h"
#include "recdc/synthetic.h"
#include "recdc/text.h"

namespace recdc::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::array<std::string_view, 4> kVariants = {
    "original", "condensed", "random", "majority"};

// Config file plus per-key flag overrides, shared by the pipeline commands.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void Register(CLI::App& command) {
    command.add_option("-c,--config", config_path,
                       "key = value config file");
    for (const ConfigKey& key : ConfigKeys()) {
      const std::string name(key.name);
      command
          .add_option_function<std::string>(
              "--" + name,
              [this, name](const std::string& v) { overrides[name] = v; },
              std::string(key.help))
          ->group("Config keys");
    }
  }

  PipelineConfig Resolve() const {
    PipelineConfig config =
        config_path.empty() ? PipelineConfig() : LoadConfig(config_path);
    for (const auto& [key, value] : overrides) config.Set(key, value);
    config.Validate();
    return config;
  }
};

struct Paths {
  fs::path root;

  fs::path Dir(std::string_view sub) const {
    fs::path dir = root / std::string(sub);
    fs::create_directories(dir);
    return dir;
  }
  fs::path Params(std::string_view variant) const {
    return root / "models" / (std::string(variant) + ".params");
  }
  fs::path Metrics(std::string_view variant) const {
    return root / "metrics" / (std::string(variant) + ".tsv");
  }
};

void Emit(const Table& table, bool json, std::ostream& out) {
  out << (json ? table.ToJson() : table.ToTsv());
}

std::string Exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CheckVariant(const std::string& which) {
  if (std::find(kVariants.begin(), kVariants.end(), which) ==
      kVariants.end()) {
    throw ValidationError("unknown variant \"" + which +
                          "\" (original, condensed, random, majority)");
  }
}

std::array<Dataset, 3> LoadSplit(const PipelineConfig& config) {
  if (config.items_path.empty() || config.behaviors_path.empty()) {
    throw ValidationError("both items and behaviors paths are required");
  }
  const Dataset dataset =
      LoadDataset(config.items_path, config.behaviors_path);
  return SplitDataset(dataset, config.split, config.seed);
}

Dataset LoadVariantData(const Paths& paths, const std::string& variant) {
  const fs::path dir = paths.root / variant;
  if (!fs::exists(dir / "items.tsv")) {
    throw IoError("no " + variant + " dataset under " + paths.root.string() +
                  "; run the condense" +
                  (variant == "condensed" ? "" : " and train") +
                  " commands first");
  }
  return LoadDataset(dir / "items.tsv", dir / "behaviors.tsv");
}

void SaveModel(const Paths& paths, std::string_view variant,
               const PipelineConfig& config, const TrainResult& result) {
  paths.Dir("models");
  SaveParams(result.params, paths.Params(variant));
  std::string meta;
  for (const ConfigKey& key : ConfigKeys()) {
    const std::string_view name = key.name;
    if (name == "seed" || name.starts_with("model.") ||
        name.starts_with("train.")) {
      meta += std::string(name) + " = " + config.Get(name) + "\n";
    }
  }
  meta += "groups_per_epoch = " + std::to_string(result.groups_per_epoch) +
          "\n";
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    meta += "epoch_loss." + std::to_string(e + 1) + " = " +
            Exact(result.epoch_losses[e]) + "\n";
  }
  if (!result.epoch_losses.empty()) {
    meta += "final_loss = " + Exact(result.epoch_losses.back()) + "\n";
  }
  WriteFile(paths.root / "models" / (std::string(variant) + ".meta"), meta);
}

Table SizeTable(const SizeReport& size, const Dataset& dataset) {
  Table table;
  table.columns = {"item_bytes", "user_bytes", "overall_bytes", "item_ratio",
                   "user_ratio", "overall_ratio", "items",     "users"};
  table.rows.push_back({std::to_string(size.item_bytes),
                        std::to_string(size.user_bytes),
                        std::to_string(size.overall_bytes),
                        FormatNumber(size.item_ratio, 6),
                        FormatNumber(size.user_ratio, 6),
                        FormatNumber(size.overall_ratio, 6),
                        std::to_string(dataset.items().size()),
                        std::to_string(dataset.users().size())});
  return table;
}

std::vector<double> ParseRealList(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string cell = text.substr(start, comma - start);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size()) {
      throw ValidationError("bad list value \"" + cell + "\"");
    }
    values.push_back(v);
    start = comma + 1;
  }
  return values;
}

// ---- commands ------------------------------------------------------------

int Ingest(const PipelineConfig& config, bool json, std::ostream& out) {
  if (config.items_path.empty() || config.behaviors_path.empty()) {
    throw ValidationError("both --items and --behaviors are required");
  }
  const Dataset dataset =
      LoadDataset(config.items_path, config.behaviors_path);
  const DatasetStats stats = ComputeStats(dataset);
  Table table;
  table.columns = {"n_items", "n_users", "avg_tokens_per_item",
                   "avg_history_len", "n_pos", "n_neg", "density"};
  table.rows.push_back({std::to_string(stats.n_items),
                        std::to_string(stats.n_users),
                        FormatNumber(stats.avg_tokens_per_item, 4),
                        FormatNumber(stats.avg_history_len, 4),
                        std::to_string(stats.n_pos),
                        std::to_string(stats.n_neg), Exact(stats.density)});
  Emit(table, json, out);
  return kExitOk;
}

int GenSynthetic(const SyntheticBenchmarkSpec& spec, const fs::path& dir,
                 bool json, std::ostream& out) {
  const SyntheticBenchmark bench = GenerateSynthetic(spec);
  fs::create_directories(dir);
  SaveDataset(bench.dataset, dir / "items.tsv", dir / "behaviors.tsv");
  WriteFile(dir / "groups.tsv", SerializeGroups(bench.user_groups));
  const DatasetStats stats = ComputeStats(bench.dataset);
  Table table;
  table.columns = {"n_items", "n_users", "n_pos", "n_neg", "groups"};
  table.rows.push_back({std::to_string(stats.n_items),
                        std::to_string(stats.n_users),
                        std::to_string(stats.n_pos),
                        std::to_string(stats.n_neg),
                        std::to_string(spec.groups)});
  Emit(table, json, out);
  return kExitOk;
}

int Condense(const PipelineConfig& config, bool json, std::ostream& out) {
  const Paths paths{config.output_dir};
  const auto parts = LoadSplit(config);
  const Dataset& train = parts[0];
  spdlog::info("training the reference model on {} users", train.users().size());
  const TrainResult reference = Train(train, config.TrainSettings());
  SaveModel(paths, "original", config, reference);

  const std::unique_ptr<LlmBackend> backend = config.MakeBackend();
  const CondensationResult result =
      recdc::Condense(train, config.CondenseSettings(), config.Prompts(),
                      *backend, reference.params);
  const fs::path dir = paths.Dir("condensed");
  SaveDataset(result.dataset, dir / "items.tsv", dir / "behaviors.tsv");
  WriteFile(dir / "provenance.tsv",
            SerializeProvenance(result.synthetic_users));
  const SizeReport size = ComputeSizeReport(result.dataset, train);
  const Table table = SizeTable(size, result.dataset);
  WriteFile(dir / "size_report.tsv", table.ToTsv());

  std::vector<std::pair<std::string, fs::path>> inputs = {
      {"items", config.items_path}, {"behaviors", config.behaviors_path}};
  if (!config.condense_prompt_path.empty()) {
    inputs.emplace_back("prompt.condense", config.condense_prompt_path);
  }
  if (!config.interest_prompt_path.empty()) {
    inputs.emplace_back("prompt.interest", config.interest_prompt_path);
  }
  WriteFile(dir / "manifest.txt", BuildManifest("condense", config, inputs));
  if (!result.failed_items.empty()) {
    spdlog::warn("{} items kept their original title after LLM failures",
                 result.failed_items.size());
  }
  Emit(table, json, out);
  return kExitOk;
}

int TrainCommand(const PipelineConfig& config, const std::string& which,
                 bool json, std::ostream& out) {
  CheckVariant(which);
  const Paths paths{config.output_dir};
  Dataset data;
  if (which == "original") {
    data = LoadSplit(config)[0];
  } else if (which == "condensed") {
    data = LoadVariantData(paths, "condensed");
  } else {
    const Dataset train = LoadSplit(config)[0];
    const Dataset condensed = LoadVariantData(paths, "condensed");
    const BaselineKind kind =
        which == "random" ? BaselineKind::kRandom : BaselineKind::kMajority;
    const BaselineRatios ratios =
        MatchBaselineRatios(kind, train, condensed, config.seed);
    data = MakeBaseline(kind, train, ratios.user_ratio, ratios.token_ratio,
                        config.seed);
    const fs::path dir = paths.Dir(which);
    SaveDataset(data, dir / "items.tsv", dir / "behaviors.tsv");
    Table size = SizeTable(ComputeSizeReport(data, train), data);
    size.columns.push_back("token_ratio");
    size.rows[0].push_back(FormatNumber(ratios.token_ratio, 6));
    WriteFile(dir / "size_report.tsv", size.ToTsv());
  }
  const TrainResult result = Train(data, config.TrainSettings());
  SaveModel(paths, which, config, result);
  Table table;
  table.columns = {"epoch", "loss"};
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    table.rows.push_back(
        {std::to_string(e + 1), FormatNumber(result.epoch_losses[e], 6)});
  }
  Emit(table, json, out);
  return kExitOk;
}

int EvalCommand(const PipelineConfig& config, const std::string& which,
                bool json, std::ostream& out) {
  CheckVariant(which);
  const Paths paths{config.output_dir};
  if (!fs::exists(paths.Params(which))) {
    throw IoError("no model for " + which + "; run `train --which " + which +
                  "` first");
  }
  const RecModelParams params = LoadParams(paths.Params(which));
  const Dataset test = LoadSplit(config)[2];
  const MetricsReport report = Evaluate(params, test, config.cutoffs);
  const Table table = MetricsTable(report);
  paths.Dir("metrics");
  WriteFile(paths.Metrics(which), table.ToTsv());
  Emit(table, json, out);
  return kExitOk;
}

int Compare(const PipelineConfig& config, bool json, std::ostream& out) {
  const Paths paths{config.output_dir};
  if (!fs::exists(paths.Metrics("original"))) {
    throw IoError("no metrics for the original model; run `eval --which "
                  "original` first");
  }
  const MetricsReport original =
      MetricsFromTable(Table::ParseTsv(ReadFile(paths.Metrics("original"))));
  Table table;
  table.columns = {"variant"};
  for (const std::string& name : original.MetricNames()) {
    table.columns.push_back(name);
  }
  table.columns.push_back("quality");
  for (std::string_view variant : kVariants) {
    if (!fs::exists(paths.Metrics(variant))) continue;
    const MetricsReport report =
        MetricsFromTable(Table::ParseTsv(ReadFile(paths.Metrics(variant))));
    std::vector<std::string> row = {std::string(variant)};
    for (double v : report.MetricValues()) row.push_back(FormatNumber(v, 4));
    row.push_back(FormatNumber(Quality(report, original), 2));
    table.rows.push_back(std::move(row));
  }
  Emit(table, json, out);
  return kExitOk;
}

int Evolve(const PipelineConfig& config, bool json, std::ostream& out) {
  const Paths paths{config.output_dir};
  const Dataset train = LoadSplit(config)[0];
  std::vector<Item> contents;
  for (const auto& [id, item] : train.items()) contents.push_back(item);
  const std::unique_ptr<LlmBackend> backend = config.MakeBackend();
  const EvoResult result =
      recdc::Evolve(config.Prompts().content, contents, config.EvoSettings(),
                    *backend, TextEncoder());
  const fs::path dir = paths.Dir("evolve");
  WriteFile(dir / "trace.tsv", SerializeTrace(result.trace));
  for (std::size_t g = 0; g < result.winners.size(); ++g) {
    SavePrompt(result.winners[g],
               dir / ("winner-" + std::to_string(g + 1) + ".prompt"));
  }
  if (const PromptTemplate* final_prompt = result.final_prompt()) {
    SavePrompt(*final_prompt, dir / "final.prompt");
  }
  Table table;
  table.columns = {"generation", "candidate", "prompt_id", "score",
                   "selected"};
  for (const TraceRow& row : ParseTrace(SerializeTrace(result.trace))) {
    table.rows.push_back({std::to_string(row.generation),
                          std::to_string(row.candidate), row.prompt_id,
                          FormatNumber(row.score, 6),
                          row.selected ? "1" : "0"});
  }
  Emit(table, json, out);
  if (result.error) {
    throw LlmOutputError("evolution stopped early: " + *result.error, "");
  }
  return kExitOk;
}

int Sweep(const PipelineConfig& config, bool alpha, const std::string& values,
          bool json, std::ostream& out) {
  const Paths paths{config.output_dir};
  const auto parts = LoadSplit(config);
  ExperimentSetup setup;
  setup.train = config.TrainSettings();
  setup.condense = config.CondenseSettings();
  setup.prompts = config.Prompts();
  setup.cutoffs = config.cutoffs;
  const std::unique_ptr<LlmBackend> backend = config.MakeBackend();
  const std::vector<double> list = ParseRealList(values);
  SweepResult sweep;
  if (alpha) {
    sweep = SweepAlpha(parts[0], parts[2], list, setup, *backend);
  } else {
    std::vector<std::size_t> ks;
    for (double v : list) {
      if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw ValidationError("K values must be positive integers");
      }
      ks.push_back(static_cast<std::size_t>(v));
    }
    sweep = SweepK(parts[0], parts[2], ks, setup, *backend);
  }
  const Table table = SweepTable(sweep, alpha ? "alpha" : "k");
  WriteFile(paths.Dir("sweeps") / (alpha ? "alpha.tsv" : "k.tsv"),
            table.ToTsv());
  Emit(table, json, out);
  return kExitOk;
}

class ErrStreamLogger {
 public:
  ErrStreamLogger(std::ostream& err, spdlog::level::level_enum level)
      : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    sink->set_pattern("[%l] %v");
    auto logger = std::make_shared<spdlog::logger>("recdc", sink);
    logger->set_level(level);
    spdlog::set_default_logger(logger);
  }
  ~ErrStreamLogger() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Training-free condensation of content-based recommendation "
               "datasets"};
  app.name(args.empty() ? "recdc" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  bool json = false;
  bool verbose = false;
  bool quiet = false;
  app.add_flag("--json", json, "emit reports as JSON instead of TSV");
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");

  std::function<int()> action;
  std::vector<std::unique_ptr<ConfigFlags>> flag_sets;
  auto pipeline = [&](const char* name, const char* help) {
    CLI::App* command = app.add_subcommand(name, help);
    flag_sets.push_back(std::make_unique<ConfigFlags>());
    flag_sets.back()->Register(*command);
    return std::pair{command, flag_sets.back().get()};
  };

  {
    auto [command, flags] =
        pipeline("ingest", "validate a dataset and print its statistics");
    command->callback(
        [&, flags] { action = [&, flags] { return Ingest(flags->Resolve(), json, out); }; });
  }

  SyntheticBenchmarkSpec spec;
  std::string synthetic_dir;
  {
    CLI::App* command = app.add_subcommand(
        "gen-synthetic", "write a planted-topic benchmark dataset");
    command->add_option("-o,--out", synthetic_dir, "output directory")
        ->required();
    command->add_option("--groups", spec.groups, "planted interest groups G")
        ->capture_default_str();
    command->add_option("--users-per-group", spec.users_per_group)
        ->capture_default_str();
    command->add_option("--items-per-topic", spec.items_per_topic)
        ->capture_default_str();
    command->add_option("--vocabulary-per-topic", spec.vocabulary_per_topic)
        ->capture_default_str();
    command->add_option("--shared-vocabulary", spec.shared_vocabulary)
        ->capture_default_str();
    command->add_option("--history-min", spec.history_min)
        ->capture_default_str();
    command->add_option("--history-max", spec.history_max)
        ->capture_default_str();
    command->add_option("--impressions-per-user", spec.impressions_per_user)
        ->capture_default_str();
    command->add_option("--positives-per-user", spec.positives_per_user)
        ->capture_default_str();
    command->add_option("--noise-rate", spec.noise_rate)
        ->capture_default_str();
    command->add_option("--topic-word-rate", spec.topic_word_rate)
        ->capture_default_str();
    command->add_option("--seed", spec.seed)->capture_default_str();
    command->callback([&] {
      action = [&] { return GenSynthetic(spec, synthetic_dir, json, out); };
    });
  }

  {
    auto [command, flags] = pipeline(
        "evolve", "evolve the content-condensation prompt (EvoPro)");
    command->callback(
        [&, flags] { action = [&, flags] { return Evolve(flags->Resolve(), json, out); }; });
  }
  {
    auto [command, flags] = pipeline(
        "condense", "train the reference model and condense the train split");
    command->callback(
        [&, flags] { action = [&, flags] { return Condense(flags->Resolve(), json, out); }; });
  }

  std::string train_which = "original";
  {
    auto [command, flags] =
        pipeline("train", "train the recommender on one dataset variant");
    command->add_option("--which", train_which,
                        "original | condensed | random | majority")
        ->capture_default_str();
    command->callback([&, flags] {
      action = [&, flags] {
        return TrainCommand(flags->Resolve(), train_which, json, out);
      };
    });
  }

  std::string eval_which = "original";
  {
    auto [command, flags] =
        pipeline("eval", "evaluate a trained variant on the test split");
    command->add_option("--which", eval_which,
                        "original | condensed | random | majority")
        ->capture_default_str();
    command->callback([&, flags] {
      action = [&, flags] {
        return EvalCommand(flags->Resolve(), eval_which, json, out);
      };
    });
  }
  {
    auto [command, flags] =
        pipeline("compare", "tabulate metrics and Quality of every variant");
    command->callback(
        [&, flags] { action = [&, flags] { return Compare(flags->Resolve(), json, out); }; });
  }

  std::string alpha_values = "0,0.2,0.5,1,2";
  {
    auto [command, flags] =
        pipeline("sweep-alpha", "Quality across interest weights alpha");
    command->add_option("--values", alpha_values, "comma-separated alphas")
        ->capture_default_str();
    command->callback([&, flags] {
      action = [&, flags] {
        return Sweep(flags->Resolve(), true, alpha_values, json, out);
      };
    });
  }
  std::string k_values = "2,4,8,16";
  {
    auto [command, flags] =
        pipeline("sweep-k", "Quality across cluster counts K");
    command->add_option("--values", k_values, "comma-separated K values")
        ->capture_default_str();
    command->callback([&, flags] {
      action = [&, flags] {
        return Sweep(flags->Resolve(), false, k_values, json, out);
      };
    });
  }

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("recdc");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  ErrStreamLogger logger(err, verbose ? spdlog::level::debug
                              : quiet ? spdlog::level::warn
                                      : spdlog::level::info);
  try {
    return action();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace recdc::cli
