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

#ifndef RECDC_SYNTHETIC_H_
#define RECDC_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "recdc/dataset.h"

namespace recdc {

// A planted-topic benchmark: G topics, each with its own items and word
// list, and users whose histories and positives come mostly from one topic.
struct SyntheticBenchmarkSpec {
  std::size_t groups = 8;
  std::size_t users_per_group = 50;
  std::size_t items_per_topic = 40;
  std::size_t vocabulary_per_topic = 60;
  std::size_t shared_vocabulary = 400;  // filler words used by every topic
  std::size_t history_min = 5;          // history length ~ U[min, max]
  std::size_t history_max = 25;
  std::size_t impressions_per_user = 200;
  std::size_t positives_per_user = 10;
  double noise_rate = 0.1;       // off-topic share of history and positives
  double topic_word_rate = 0.3;  // topic-word share of abstract tokens
  std::uint64_t seed = 0;

  // Throws ValidationError when the counts cannot be satisfied.
  void Validate() const;
};

struct SyntheticBenchmark {
  Dataset dataset;
  std::map<std::string, std::size_t, std::less<>> user_groups;
  std::vector<std::string> topic_names;  // category of each topic's items
};

// Deterministic given spec.seed. Per user, exactly
// floor(noise_rate * n) of the n history items (and of the positives) come
// from other topics; negatives are all off-topic.
SyntheticBenchmark GenerateSynthetic(const SyntheticBenchmarkSpec& spec);

// user_id<TAB>group, with a header line.
inline constexpr std::string_view kGroupsHeader = "user_id\tgroup";
std::string SerializeGroups(
    const std::map<std::string, std::size_t, std::less<>>& groups);
std::map<std::string, std::size_t, std::less<>> ParseGroups(
    std::string_view text, std::string_view source);

}  // namespace recdc

#endif  // RECDC_SYNTHETIC_H_
