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

#ifndef RECDC_CONFIG_H_
#define RECDC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "recdc/condenser.h"
#include "recdc/dataset.h"
#include "recdc/evopro.h"
#include "recdc/llm.h"
#include "recdc/rec_model.h"

namespace recdc {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class BackendKind { kMock, kRemote };

// Everything a pipeline command needs. The text form is a flat
// `key = value` file; `#` starts a comment. See ConfigKeys() for the keys.
struct PipelineConfig {
  std::string items_path;
  std::string behaviors_path;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  SplitRatios split;
  TrainConfig train;
  CondenseConfig condense;
  EvoConfig evo;
  BackendKind backend = BackendKind::kMock;
  MockBackendConfig mock;
  RemoteBackendConfig remote;
  std::string condense_prompt_path;  // empty: built-in default
  std::string interest_prompt_path;  // empty: built-in default
  std::vector<std::size_t> cutoffs = {5, 10};

  // Sets one key from its text value. Throws ValidationError for unknown
  // keys and malformed values.
  void Set(std::string_view key, std::string_view value);
  std::string Get(std::string_view key) const;

  // Checks every nested config.
  void Validate() const;

  // Canonical `key = value` text covering every key, in ConfigKeys() order.
  std::string Serialize() const;

  // Nested configs with the global seed applied.
  TrainConfig TrainSettings() const;
  CondenseConfig CondenseSettings() const;
  EvoConfig EvoSettings() const;
  CondensePrompts Prompts() const;
  std::unique_ptr<LlmBackend> MakeBackend() const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view help;
};
const std::vector<ConfigKey>& ConfigKeys();

PipelineConfig ParseConfig(std::string_view text, std::string_view source);
PipelineConfig LoadConfig(const std::filesystem::path& path);

// Run manifest: tool version, command, seed, config digest, input digests
// and the canonical config. No timestamps, so reruns are byte-identical.
std::string BuildManifest(
    std::string_view command, const PipelineConfig& config,
    const std::vector<std::pair<std::string, std::filesystem::path>>& inputs);

}  // namespace recdc

#endif  // RECDC_CONFIG_H_
