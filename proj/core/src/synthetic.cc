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

#include "recdc/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "recdc/errors.h"
#include "recdc/random.h"

namespace recdc {
namespace {

constexpr std::string_view kTopicNames[] = {
    "sports", "travel", "finance", "health", "music", "science",
    "cooking", "politics", "fashion", "gaming", "movies", "autos"};

constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m",
                                        "n", "p", "r", "s", "t", "v", "z",
                                        "br", "st", "tr", "pl", "gr", "sh"};
constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};

std::string MakeWord(Rng& rng, std::set<std::string>& used) {
  while (true) {
    std::string word;
    const std::size_t syllables = 2 + rng.UniformIndex(2);
    for (std::size_t s = 0; s < syllables; ++s) {
      word += kOnsets[rng.UniformIndex(std::size(kOnsets))];
      word += kVowels[rng.UniformIndex(std::size(kVowels))];
    }
    if (used.insert(word).second) return word;
  }
}

std::string PaddedId(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%05zu", prefix, n);
  return buf;
}

// Draws `count` distinct values from `pool` (partial Fisher-Yates).
std::vector<std::string> Draw(std::vector<std::string> pool, std::size_t count,
                              Rng& rng) {
  for (std::size_t k = 0; k < count; ++k) {
    std::swap(pool[k], pool[k + rng.UniformIndex(pool.size() - k)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

void SyntheticBenchmarkSpec::Validate() const {
  auto fail = [](const std::string& what) { throw ValidationError(what); };
  if (groups < 2) fail("synthetic benchmark needs at least 2 groups");
  if (users_per_group < 1) fail("users_per_group must be >= 1");
  if (vocabulary_per_topic < 4) fail("vocabulary_per_topic must be >= 4");
  if (history_min < 1 || history_min > history_max) {
    fail("history length range must satisfy 1 <= min <= max");
  }
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) {
    fail("noise_rate must lie in [0, 1)");
  }
  if (!(topic_word_rate > 0.0 && topic_word_rate <= 1.0)) {
    fail("topic_word_rate must lie in (0, 1]");
  }
  if (positives_per_user < 1 || positives_per_user > impressions_per_user) {
    fail("positives_per_user must lie in [1, impressions_per_user]");
  }
  if (history_max + positives_per_user > items_per_topic) {
    fail("items_per_topic must cover history_max + positives_per_user");
  }
  const std::size_t negatives = impressions_per_user - positives_per_user;
  const std::size_t off_topic = (groups - 1) * items_per_topic;
  if (negatives + history_max + positives_per_user > off_topic) {
    fail("too few off-topic items for the requested negatives");
  }
}

SyntheticBenchmark GenerateSynthetic(const SyntheticBenchmarkSpec& spec) {
  spec.Validate();
  Rng rng(HashCombine(spec.seed, 0x5b7e));
  SyntheticBenchmark out;

  std::set<std::string> used;
  for (std::size_t g = 0; g < spec.groups; ++g) {
    std::string name = g < std::size(kTopicNames)
                           ? std::string(kTopicNames[g])
                           : "topic" + std::to_string(g);
    used.insert(name);
    out.topic_names.push_back(std::move(name));
  }
  std::vector<std::vector<std::string>> topic_words(spec.groups);
  for (auto& words : topic_words) {
    for (std::size_t w = 0; w < spec.vocabulary_per_topic; ++w) {
      words.push_back(MakeWord(rng, used));
    }
  }
  std::vector<std::string> shared;
  for (std::size_t w = 0; w < spec.shared_vocabulary; ++w) {
    shared.push_back(MakeWord(rng, used));
  }
  auto filler = [&]() -> const std::string& {
    return shared.empty() ? topic_words[0][0]
                          : shared[rng.UniformIndex(shared.size())];
  };

  ItemMap items;
  std::vector<std::vector<std::string>> topic_items(spec.groups);
  std::size_t next_item = 0;
  for (std::size_t g = 0; g < spec.groups; ++g) {
    const auto& words = topic_words[g];
    for (std::size_t i = 0; i < spec.items_per_topic; ++i) {
      Item item;
      item.id = PaddedId('N', ++next_item);
      item.category = out.topic_names[g];
      const std::size_t title_topic = 3 + rng.UniformIndex(3);
      for (std::size_t t = 0; t < title_topic; ++t) {
        if (t) item.title += ' ';
        item.title += words[rng.UniformIndex(words.size())];
      }
      if (!shared.empty()) item.title += ' ' + filler();
      const std::size_t abstract_len = 30 + rng.UniformIndex(21);
      for (std::size_t t = 0; t < abstract_len; ++t) {
        if (t) item.abstract_text += ' ';
        item.abstract_text += rng.Bernoulli(spec.topic_word_rate)
                                  ? words[rng.UniformIndex(words.size())]
                                  : filler();
      }
      topic_items[g].push_back(item.id);
      items.emplace(item.id, std::move(item));
    }
  }

  HistoryMap users;
  std::vector<Impression> impressions;
  const std::size_t span = spec.history_max - spec.history_min + 1;
  std::size_t next_user = 0;
  for (std::size_t g = 0; g < spec.groups; ++g) {
    std::vector<std::string> others;
    for (std::size_t o = 0; o < spec.groups; ++o) {
      if (o != g) {
        others.insert(others.end(), topic_items[o].begin(),
                      topic_items[o].end());
      }
    }
    for (std::size_t u = 0; u < spec.users_per_group; ++u) {
      const std::string user_id = PaddedId('U', ++next_user);
      const std::size_t len = spec.history_min + rng.UniformIndex(span);
      const std::size_t pos = spec.positives_per_user;
      const auto off = [&](std::size_t n) {
        return static_cast<std::size_t>(
            std::floor(spec.noise_rate * static_cast<double>(n)));
      };
      const std::size_t off_hist = off(len), off_pos = off(pos);
      std::vector<std::string> own =
          Draw(topic_items[g], len - off_hist + pos - off_pos, rng);
      std::vector<std::string> foreign =
          Draw(others,
               off_hist + off_pos + spec.impressions_per_user - pos, rng);

      ClickHistory history{user_id, {}};
      history.item_ids.assign(own.begin(), own.begin() + (len - off_hist));
      history.item_ids.insert(history.item_ids.end(), foreign.begin(),
                              foreign.begin() + off_hist);
      rng.Shuffle(std::span<std::string>(history.item_ids));

      std::vector<Impression> mine;
      for (std::size_t i = len - off_hist; i < own.size(); ++i) {
        mine.push_back({user_id, own[i], 1});
      }
      for (std::size_t i = off_hist; i < off_hist + off_pos; ++i) {
        mine.push_back({user_id, foreign[i], 1});
      }
      for (std::size_t i = off_hist + off_pos; i < foreign.size(); ++i) {
        mine.push_back({user_id, foreign[i], 0});
      }
      rng.Shuffle(std::span<Impression>(mine));
      impressions.insert(impressions.end(), mine.begin(), mine.end());
      users.emplace(user_id, std::move(history));
      out.user_groups.emplace(user_id, g);
    }
  }
  out.dataset = Dataset::Create(std::move(items), std::move(users),
                                std::move(impressions));
  return out;
}

std::string SerializeGroups(
    const std::map<std::string, std::size_t, std::less<>>& groups) {
  std::string out(kGroupsHeader);
  out += '\n';
  for (const auto& [user, group] : groups) {
    out += user;
    out += '\t';
    out += std::to_string(group);
    out += '\n';
  }
  return out;
}

std::map<std::string, std::size_t, std::less<>> ParseGroups(
    std::string_view text, std::string_view source) {
  std::map<std::string, std::size_t, std::less<>> groups;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kGroupsHeader) {
        throw ParseError(std::string(source), line_no, "bad groups header");
      }
      continue;
    }
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw ParseError(std::string(source), line_no, "expected user<TAB>group");
    }
    const std::string group(line.substr(tab + 1));
    if (group.empty() ||
        !std::all_of(group.begin(), group.end(),
                     [](char c) { return c >= '0' && c <= '9'; })) {
      throw ParseError(std::string(source), line_no, "bad group index");
    }
    if (!groups.emplace(std::string(line.substr(0, tab)), std::stoul(group))
             .second) {
      throw ParseError(std::string(source), line_no, "duplicate user");
    }
  }
  return groups;
}

}  // namespace recdc
