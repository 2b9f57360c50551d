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

#include "recdc/evopro.h"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "recdc/errors.h"
#include "recdc/random.h"

namespace recdc {

std::vector<double> ItemSimilarities(const PromptTemplate& prompt,
                                     std::span<const Item> contents,
                                     LlmBackend& backend,
                                     const TextEncoder& encoder) {
  std::vector<double> similarities(contents.size(), kFailedItemSimilarity);
  ParallelFor(contents.size(), backend.max_in_flight(), [&](std::size_t i) {
    const Item& item = contents[i];
    std::string condensed;
    try {
      condensed = CondenseItem(backend, prompt, item);
    } catch (const LlmOutputError& e) {
      spdlog::warn("prompt {}: item {} failed to condense: {}", prompt.id,
                   item.id, e.what());
      return;
    } catch (const TransportError& e) {
      spdlog::warn("prompt {}: item {} failed to condense: {}", prompt.id,
                   item.id, e.what());
      return;
    }
    similarities[i] = CosineSimilarity(encoder.Encode(item.Content()),
                                       encoder.Encode(condensed));
  });
  return similarities;
}

double CalScore(const PromptTemplate& prompt, std::span<const Item> contents,
                LlmBackend& backend, const TextEncoder& encoder) {
  if (contents.empty()) {
    throw std::invalid_argument("prompt scoring needs at least one item");
  }
  double score = 0.0;
  for (double s : ItemSimilarities(prompt, contents, backend, encoder)) {
    score += s;
  }
  return score;
}

void EvoConfig::Validate() const {
  if (generations < 1) throw ValidationError("evolution needs E >= 1");
  if (children < 1) throw ValidationError("evolution needs N >= 1");
}

std::size_t SelectWinner(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("no scores to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::vector<std::size_t> ScoringSample(std::size_t n, std::size_t sample,
                                       std::uint64_t seed) {
  std::vector<std::size_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) indices[i] = i;
  if (sample == 0 || sample >= n) return indices;
  Rng rng(HashCombine(seed, 0xe70));
  for (std::size_t k = 0; k < sample; ++k) {
    std::swap(indices[k], indices[k + rng.UniformIndex(n - k)]);
  }
  indices.resize(sample);
  std::sort(indices.begin(), indices.end());
  return indices;
}

EvoResult Evolve(const PromptTemplate& initial, std::span<const Item> contents,
                 const EvoConfig& config, LlmBackend& backend,
                 const TextEncoder& encoder) {
  config.Validate();
  if (contents.empty()) {
    throw std::invalid_argument("prompt evolution needs at least one item");
  }
  std::vector<Item> scored;
  for (std::size_t i :
       ScoringSample(contents.size(), config.score_sample, config.seed)) {
    scored.push_back(contents[i]);
  }

  EvoResult result;
  PromptTemplate parent = initial;
  for (std::size_t e = 1; e <= config.generations; ++e) {
    std::vector<PromptTemplate> children;
    try {
      children = GenerateChildPrompts(backend, parent, config.children);
    } catch (const Error& err) {
      result.error = "generation " + std::to_string(e) +
                     ": child prompt generation failed: " + err.what();
      spdlog::error("{}", *result.error);
      break;
    }
    EvoGeneration generation;
    std::vector<double> scores;
    for (PromptTemplate& child : children) {
      const double s = CalScore(child, scored, backend, encoder);
      scores.push_back(s);
      generation.candidates.push_back({std::move(child), s});
    }
    generation.selected = SelectWinner(scores);
    parent = generation.candidates[generation.selected].prompt;
    spdlog::info("generation {}: selected {} (score {:.6f})", e, parent.id,
                 scores[generation.selected]);
    result.winners.push_back(parent);
    result.trace.generations.push_back(std::move(generation));
  }
  return result;
}

std::string SerializeTrace(const EvoTrace& trace) {
  std::string out = "generation\tcandidate\tprompt_id\tscore\tselected\n";
  char buf[64];
  for (std::size_t g = 0; g < trace.generations.size(); ++g) {
    const EvoGeneration& gen = trace.generations[g];
    for (std::size_t c = 0; c < gen.candidates.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", gen.candidates[c].score);
      out += std::to_string(g + 1) + '\t' + std::to_string(c + 1) + '\t' +
             gen.candidates[c].prompt.id + '\t' + buf + '\t' +
             (c == gen.selected ? "1" : "0") + '\n';
    }
  }
  return out;
}

std::vector<TraceRow> ParseTrace(std::string_view text) {
  std::vector<TraceRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 || line.empty()) continue;
    std::istringstream fields(line);
    TraceRow row;
    std::string score, selected;
    if (!(fields >> row.generation >> row.candidate >> row.prompt_id >> score >>
          selected)) {
      throw ParseError("trace", number, "expected 5 fields");
    }
    row.score = std::stod(score);
    row.selected = selected == "1";
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace recdc
