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

#include "recdc/config.h"

#include <charconv>
#include <cmath>
#include <functional>

#include "recdc/errors.h"
#include "recdc/file_io.h"

namespace recdc {
namespace {

std::string_view Trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

[[noreturn]] void Bad(std::string_view key, std::string_view value,
                      std::string_view expected) {
  throw ValidationError("config key " + std::string(key) + ": \"" +
                        std::string(value) + "\" is not " +
                        std::string(expected));
}

std::uint64_t ToU64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    Bad(key, v, "a non-negative integer");
  }
  return out;
}

double ToDouble(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out)) {
    Bad(key, v, "a finite number");
  }
  return out;
}

bool ToBool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  Bad(key, v, "true or false");
}

// Shortest text that reads back as the same double.
std::string FromDouble(double v) {
  char buf[64];
  const auto written = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, written.ptr);
}

struct KeyOps {
  ConfigKey key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define RECDC_STRING_KEY(name, help, field)                               \
  KeyOps {                                                                \
    {name, help}, [](PipelineConfig& c, std::string_view v) {             \
      c.field = std::string(v);                                           \
    },                                                                    \
        [](const PipelineConfig& c) { return std::string(c.field); }      \
  }
#define RECDC_COUNT_KEY(name, help, field)                                \
  KeyOps {                                                                \
    {name, help}, [](PipelineConfig& c, std::string_view v) {             \
      c.field = static_cast<decltype(c.field)>(ToU64(name, v));           \
    },                                                                    \
        [](const PipelineConfig& c) { return std::to_string(c.field); }   \
  }
#define RECDC_REAL_KEY(name, help, field)                                 \
  KeyOps {                                                                \
    {name, help},                                                         \
        [](PipelineConfig& c, std::string_view v) {                       \
          c.field = ToDouble(name, v);                                    \
        },                                                                \
        [](const PipelineConfig& c) { return FromDouble(c.field); }       \
  }

const std::vector<KeyOps>& Keys() {
  static const std::vector<KeyOps> keys = {
      RECDC_STRING_KEY("items", "items file", items_path),
      RECDC_STRING_KEY("behaviors", "behaviors file", behaviors_path),
      RECDC_STRING_KEY("output_dir", "directory for all outputs", output_dir),
      RECDC_COUNT_KEY("seed", "global seed", seed),
      RECDC_REAL_KEY("split.train", "train share", split.train),
      RECDC_REAL_KEY("split.validation", "validation share",
                     split.validation),
      RECDC_REAL_KEY("split.test", "test share", split.test),
      RECDC_COUNT_KEY("model.buckets", "hashed vocabulary rows",
                      train.shape.buckets),
      RECDC_COUNT_KEY("model.content_dim", "item embedding width",
                      train.shape.content_dim),
      RECDC_COUNT_KEY("model.user_dim", "user embedding width",
                      train.shape.user_dim),
      RECDC_REAL_KEY("train.learning_rate", "Adam step size",
                     train.learning_rate),
      RECDC_COUNT_KEY("train.negative_ratio", "negatives per positive",
                      train.negative_ratio),
      RECDC_COUNT_KEY("train.epochs", "passes over the positives",
                      train.epochs),
      RECDC_COUNT_KEY("train.batch_size", "groups per update",
                      train.batch_size),
      RECDC_REAL_KEY("train.init_scale", "uniform init half-width",
                     train.init_scale),
      RECDC_COUNT_KEY("condense.k", "synthetic users (clusters)",
                      condense.k),
      RECDC_COUNT_KEY("condense.m", "members merged per cluster",
                      condense.m),
      RECDC_REAL_KEY("condense.alpha", "interest-distance weight",
                     condense.alpha),
      KeyOps{{"condense.impressions", "pool | history"},
             [](PipelineConfig& c, std::string_view v) {
               if (v == "pool") {
                 c.condense.impressions = SyntheticImpressions::kPoolMembers;
               } else if (v == "history") {
                 c.condense.impressions =
                     SyntheticImpressions::kHistoryPositives;
               } else {
                 Bad("condense.impressions", v, "pool or history");
               }
             },
             [](const PipelineConfig& c) {
               return std::string(c.condense.impressions ==
                                          SyntheticImpressions::kPoolMembers
                                      ? "pool"
                                      : "history");
             }},
      RECDC_COUNT_KEY("condense.negative_ratio",
                      "negatives per history positive (history mode)",
                      condense.negative_ratio),
      RECDC_COUNT_KEY("kmeans.max_iterations", "Lloyd iteration cap",
                      condense.kmeans.max_iterations),
      RECDC_REAL_KEY("kmeans.tolerance", "centroid shift to stop",
                     condense.kmeans.tolerance),
      RECDC_COUNT_KEY("kmeans.restarts", "restarts, best inertia kept",
                      condense.kmeans.restarts),
      RECDC_COUNT_KEY("evo.generations", "generations E", evo.generations),
      RECDC_COUNT_KEY("evo.children", "children per generation N",
                      evo.children),
      RECDC_COUNT_KEY("evo.score_sample", "items scored (0: all)",
                      evo.score_sample),
      KeyOps{{"llm.backend", "mock | remote"},
             [](PipelineConfig& c, std::string_view v) {
               if (v == "mock") {
                 c.backend = BackendKind::kMock;
               } else if (v == "remote") {
                 c.backend = BackendKind::kRemote;
               } else {
                 Bad("llm.backend", v, "mock or remote");
               }
             },
             [](const PipelineConfig& c) {
               return std::string(c.backend == BackendKind::kMock ? "mock"
                                                                  : "remote");
             }},
      RECDC_COUNT_KEY("mock.summary_budget", "condensed title token cap",
                      mock.summary_budget),
      RECDC_COUNT_KEY("mock.interest_count", "interests per user",
                      mock.interest_count),
      KeyOps{{"mock.echo", "return full content as the condensed title"},
             [](PipelineConfig& c, std::string_view v) {
               c.mock.echo = ToBool("mock.echo", v);
             },
             [](const PipelineConfig& c) {
               return std::string(c.mock.echo ? "true" : "false");
             }},
      RECDC_STRING_KEY("remote.base_url", "e.g. https://api.openai.com",
                       remote.base_url),
      RECDC_STRING_KEY("remote.path", "chat-completion path", remote.path),
      RECDC_STRING_KEY("remote.model", "model name", remote.model),
      RECDC_STRING_KEY("remote.token_env", "env var holding the token",
                       remote.token_env),
      KeyOps{{"remote.timeout_seconds", "per-request timeout"},
             [](PipelineConfig& c, std::string_view v) {
               c.remote.timeout = std::chrono::seconds(
                   ToU64("remote.timeout_seconds", v));
             },
             [](const PipelineConfig& c) {
               return std::to_string(c.remote.timeout.count());
             }},
      RECDC_COUNT_KEY("remote.max_retries", "retries after the first try",
                      remote.retry.max_retries),
      RECDC_COUNT_KEY("remote.max_in_flight", "concurrent requests",
                      remote.max_in_flight),
      RECDC_STRING_KEY("prompt.condense", "condense prompt file",
                       condense_prompt_path),
      RECDC_STRING_KEY("prompt.interest", "interest prompt file",
                       interest_prompt_path),
      KeyOps{{"metrics.cutoffs", "comma-separated K list, e.g. 5,10"},
             [](PipelineConfig& c, std::string_view v) {
               std::vector<std::size_t> cutoffs;
               while (true) {
                 const std::size_t comma = v.find(',');
                 cutoffs.push_back(static_cast<std::size_t>(
                     ToU64("metrics.cutoffs", Trim(v.substr(0, comma)))));
                 if (comma == std::string_view::npos) break;
                 v.remove_prefix(comma + 1);
               }
               c.cutoffs = std::move(cutoffs);
             },
             [](const PipelineConfig& c) {
               std::string out;
               for (std::size_t k : c.cutoffs) {
                 if (!out.empty()) out += ',';
                 out += std::to_string(k);
               }
               return out;
             }},
  };
  return keys;
}

#undef RECDC_STRING_KEY
#undef RECDC_COUNT_KEY
#undef RECDC_REAL_KEY

const KeyOps& FindKey(std::string_view key) {
  for (const KeyOps& ops : Keys()) {
    if (ops.key.name == key) return ops;
  }
  throw ValidationError("unknown config key \"" + std::string(key) + "\"");
}

}  // namespace

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const KeyOps& ops : Keys()) out.push_back(ops.key);
    return out;
  }();
  return keys;
}

void PipelineConfig::Set(std::string_view key, std::string_view value) {
  FindKey(key).set(*this, Trim(value));
}

std::string PipelineConfig::Get(std::string_view key) const {
  return FindKey(key).get(*this);
}

void PipelineConfig::Validate() const {
  const double sum = split.train + split.validation + split.test;
  if (!(split.train > 0 && split.validation > 0 && split.test > 0) ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split shares must be positive and sum to 1");
  }
  TrainSettings().Validate();
  CondenseSettings().Validate();
  EvoSettings().Validate();
  if (cutoffs.empty()) throw ValidationError("metrics.cutoffs is empty");
  for (std::size_t k : cutoffs) {
    if (k < 1) throw ValidationError("metric cutoffs must be >= 1");
  }
  if (mock.summary_budget < 1 || mock.interest_count < 1) {
    throw ValidationError("mock budgets must be >= 1");
  }
  if (backend == BackendKind::kRemote) {
    if (remote.base_url.empty()) {
      throw ValidationError("remote.base_url is required for llm.backend = "
                            "remote");
    }
    if (remote.max_in_flight < 1 || remote.max_in_flight > 256) {
      throw ValidationError("remote.max_in_flight must lie in [1, 256]");
    }
  }
}

std::string PipelineConfig::Serialize() const {
  std::string out;
  for (const KeyOps& ops : Keys()) {
    out += ops.key.name;
    out += " = ";
    out += ops.get(*this);
    out += '\n';
  }
  return out;
}

TrainConfig PipelineConfig::TrainSettings() const {
  TrainConfig out = train;
  out.seed = seed;
  return out;
}

CondenseConfig PipelineConfig::CondenseSettings() const {
  CondenseConfig out = condense;
  out.seed = seed;
  return out;
}

EvoConfig PipelineConfig::EvoSettings() const {
  EvoConfig out = evo;
  out.seed = seed;
  return out;
}

CondensePrompts PipelineConfig::Prompts() const {
  CondensePrompts prompts;
  prompts.content = condense_prompt_path.empty()
                        ? DefaultCondensePrompt()
                        : LoadPrompt(condense_prompt_path);
  prompts.interest = interest_prompt_path.empty()
                         ? DefaultInterestPrompt()
                         : LoadPrompt(interest_prompt_path);
  return prompts;
}

std::unique_ptr<LlmBackend> PipelineConfig::MakeBackend() const {
  if (backend == BackendKind::kRemote) {
    return std::make_unique<RemoteBackend>(remote);
  }
  MockBackendConfig config = mock;
  config.seed = seed;
  return std::make_unique<MockBackend>(config);
}

PipelineConfig ParseConfig(std::string_view text, std::string_view source) {
  PipelineConfig config;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const std::size_t hash = line.find('#');
        hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(std::string(source), line_no, "expected key = value");
    }
    try {
      config.Set(Trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
  }
  return config;
}

PipelineConfig LoadConfig(const std::filesystem::path& path) {
  return ParseConfig(ReadFile(path), path.string());
}

std::string BuildManifest(
    std::string_view command, const PipelineConfig& config,
    const std::vector<std::pair<std::string, std::filesystem::path>>& inputs) {
  const std::string canonical = config.Serialize();
  std::string out;
  out += "tool\trecdc ";
  out += kToolVersion;
  out += "\ncommand\t";
  out += command;
  out += "\nseed\t" + std::to_string(config.seed);
  out += "\nconfig_sha256\t" + Sha256Hex(canonical) + "\n";
  for (const auto& [name, path] : inputs) {
    out += "input\t" + name + "\t" + path.filename().string() + "\t" +
           Sha256Hex(ReadFile(path)) + "\n";
  }
  out += "[config]\n";
  out += canonical;
  return out;
}

}  // namespace recdc
