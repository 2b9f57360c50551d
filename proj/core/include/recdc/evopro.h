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

#ifndef RECDC_EVOPRO_H_
#define RECDC_EVOPRO_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recdc/dataset.h"
#include "recdc/llm.h"
#include "recdc/text.h"

namespace recdc {

// Similarity assigned to an item whose condensation failed for good.
inline constexpr double kFailedItemSimilarity = -1.0;

// Per-item cosine similarity between the encoded original content and the
// encoded condensed title produced under `prompt`. Items are condensed
// concurrently up to the backend's in-flight cap; the output is indexed
// like `contents`.
std::vector<double> ItemSimilarities(const PromptTemplate& prompt,
                                     std::span<const Item> contents,
                                     LlmBackend& backend,
                                     const TextEncoder& encoder);

// Sum of ItemSimilarities, accumulated in item order. Throws
// std::invalid_argument on empty contents.
double CalScore(const PromptTemplate& prompt, std::span<const Item> contents,
                LlmBackend& backend, const TextEncoder& encoder);

struct EvoConfig {
  std::size_t generations = 3;  // E
  std::size_t children = 4;     // N, prompts per generation
  // Items scored per prompt; 0 scores every item.
  std::size_t score_sample = 0;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct EvoCandidate {
  PromptTemplate prompt;
  double score = 0.0;
};

struct EvoGeneration {
  std::vector<EvoCandidate> candidates;
  std::size_t selected = 0;
};

struct EvoTrace {
  std::vector<EvoGeneration> generations;
};

struct EvoResult {
  // Winner of every completed generation, oldest first.
  std::vector<PromptTemplate> winners;
  EvoTrace trace;
  // Set when child generation failed and evolution stopped early.
  std::optional<std::string> error;

  // Best prompt of the latest completed generation, or nullptr if none
  // completed.
  const PromptTemplate* final_prompt() const {
    return winners.empty() ? nullptr : &winners.back();
  }
};

// Index of the highest score; ties go to the lowest index.
std::size_t SelectWinner(std::span<const double> scores);

// Sorted item indices used for scoring: all of [0, n) when sample is 0 or
// >= n, otherwise a seeded sample without replacement.
std::vector<std::size_t> ScoringSample(std::size_t n, std::size_t sample,
                                       std::uint64_t seed);

// Generation-by-generation prompt search: each generation asks the backend
// for N children of the previous winner, scores them with CalScore on a
// fixed item sample, and keeps the best.
EvoResult Evolve(const PromptTemplate& initial, std::span<const Item> contents,
                 const EvoConfig& config, LlmBackend& backend,
                 const TextEncoder& encoder);

// Line-delimited trace with a header:
//   generation<TAB>candidate<TAB>prompt_id<TAB>score<TAB>selected
// Generations and candidates are 1-based; scores print with 17 digits.
std::string SerializeTrace(const EvoTrace& trace);

struct TraceRow {
  std::size_t generation = 0;
  std::size_t candidate = 0;
  std::string prompt_id;
  double score = 0.0;
  bool selected = false;
};

std::vector<TraceRow> ParseTrace(std::string_view text);

}  // namespace recdc

#endif  // RECDC_EVOPRO_H_
