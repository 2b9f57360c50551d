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

#include "recdc/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "recdc/errors.h"
#include "recdc/file_io.h"
#include "recdc/random.h"

namespace recdc {
namespace {

bool HasWhitespace(std::string_view s) {
  return s.find_first_of(" \t\r\n") != std::string_view::npos;
}

bool HasTabOrNewline(std::string_view s) {
  return s.find_first_of("\t\r\n") != std::string_view::npos;
}

std::vector<std::string_view> SplitOn(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> SplitWords(std::string_view s) {
  std::vector<std::string_view> words;
  for (std::string_view w : SplitOn(s, ' ')) {
    if (!w.empty()) words.push_back(w);
  }
  return words;
}

// Numbered, non-empty lines of a text blob. A trailing '\r' is dropped.
std::vector<std::pair<std::size_t, std::string_view>> Lines(
    std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t number = 0;
  for (std::string_view line : SplitOn(text, '\n')) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.emplace_back(number, line);
  }
  return lines;
}

void Canonicalize(HistoryMap& users, std::vector<Impression>& impressions) {
  for (auto& [id, history] : users) {
    std::unordered_set<std::string> seen;
    std::vector<std::string> unique;
    unique.reserve(history.item_ids.size());
    for (std::string& item_id : history.item_ids) {
      if (seen.insert(item_id).second) unique.push_back(std::move(item_id));
    }
    history.item_ids = std::move(unique);
  }
  std::stable_sort(impressions.begin(), impressions.end(),
                   [](const Impression& a, const Impression& b) {
                     return a.user_id < b.user_id;
                   });
}

// Splits a stream of counts into three parts whose running totals stay
// within one unit of the ratios.
class StreamApportioner {
 public:
  explicit StreamApportioner(const std::array<double, 3>& weights)
      : weights_(weights) {}

  // Hands out n units one at a time, each to the part furthest below its
  // running target weight * total (lowest index on ties).
  std::array<std::size_t, 3> Take(std::size_t n) {
    std::array<std::size_t, 3> counts{};
    for (std::size_t i = 0; i < n; ++i) {
      ++total_;
      int best = 0;
      double best_deficit = -1e300;
      for (int k = 0; k < 3; ++k) {
        const double deficit = weights_[k] * static_cast<double>(total_) -
                               static_cast<double>(assigned_[k]);
        if (deficit > best_deficit + 1e-9) {
          best = k;
          best_deficit = deficit;
        }
      }
      ++assigned_[best];
      ++counts[best];
    }
    return counts;
  }

 private:
  std::array<double, 3> weights_;
  std::array<std::size_t, 3> assigned_{};
  std::size_t total_ = 0;
};

}  // namespace

std::string Item::Content() const {
  std::string out = title;
  for (const std::string* field : {&abstract_text, &category}) {
    if (field->empty()) continue;
    if (!out.empty()) out += ' ';
    out += *field;
  }
  return out;
}

Dataset::Dataset()
    : items_(std::make_shared<const ItemMap>()),
      users_(std::make_shared<const HistoryMap>()) {}

Dataset Dataset::CreateUnchecked(ItemMap items, HistoryMap users,
                                 std::vector<Impression> impressions) {
  Canonicalize(users, impressions);
  Dataset d;
  d.items_ = std::make_shared<const ItemMap>(std::move(items));
  d.users_ = std::make_shared<const HistoryMap>(std::move(users));
  d.impressions_ = std::move(impressions);
  return d;
}

Dataset Dataset::Create(ItemMap items, HistoryMap users,
                        std::vector<Impression> impressions) {
  Dataset d = CreateUnchecked(std::move(items), std::move(users),
                              std::move(impressions));
  d.Validate();
  return d;
}

Dataset Dataset::WithImpressions(const Dataset& base,
                                 std::vector<Impression> impressions) {
  HistoryMap unused;
  Canonicalize(unused, impressions);
  Dataset d;
  d.items_ = base.items_;
  d.users_ = base.users_;
  d.impressions_ = std::move(impressions);
  return d;
}

const Item& Dataset::item(std::string_view id) const {
  auto it = items_->find(id);
  if (it == items_->end()) {
    throw DanglingReferenceError(std::string(id), "item lookup");
  }
  return it->second;
}

const ClickHistory& Dataset::history(std::string_view user_id) const {
  auto it = users_->find(user_id);
  if (it == users_->end()) {
    throw DanglingReferenceError(std::string(user_id), "user lookup");
  }
  return it->second;
}

std::vector<ImpressionGroup> Dataset::GroupsByUser() const {
  std::vector<ImpressionGroup> groups;
  std::size_t i = 0;
  while (i < impressions_.size()) {
    std::size_t j = i;
    while (j < impressions_.size() &&
           impressions_[j].user_id == impressions_[i].user_id) {
      ++j;
    }
    groups.push_back(
        {impressions_[i].user_id,
         std::span<const Impression>(impressions_.data() + i, j - i)});
    i = j;
  }
  return groups;
}

void Dataset::Validate() const {
  for (const auto& [key, item] : *items_) {
    if (item.id.empty()) throw ValidationError("item with empty id");
    if (key != item.id) {
      throw ValidationError("item table key \"" + key +
                            "\" does not match item id \"" + item.id + "\"");
    }
    if (HasWhitespace(item.id)) {
      throw ValidationError("item id \"" + item.id + "\" contains whitespace");
    }
    if (item.title.empty()) {
      throw ValidationError("item \"" + item.id + "\" has an empty title");
    }
    if (HasTabOrNewline(item.title) || HasTabOrNewline(item.abstract_text) ||
        HasTabOrNewline(item.category)) {
      throw ValidationError("item \"" + item.id +
                            "\" has a TAB or newline inside a field");
    }
  }
  for (const auto& [key, history] : *users_) {
    if (history.user_id.empty()) throw ValidationError("user with empty id");
    if (key != history.user_id) {
      throw ValidationError("user table key \"" + key +
                            "\" does not match user id \"" +
                            history.user_id + "\"");
    }
    if (HasWhitespace(history.user_id)) {
      throw ValidationError("user id \"" + history.user_id +
                            "\" contains whitespace");
    }
    for (const std::string& id : history.item_ids) {
      if (!items_->contains(id)) {
        throw DanglingReferenceError(id, "history of user " + key);
      }
    }
  }
  for (const Impression& imp : impressions_) {
    if (!users_->contains(imp.user_id)) {
      throw DanglingReferenceError(imp.user_id, "impression user");
    }
    if (!items_->contains(imp.candidate_item_id)) {
      throw DanglingReferenceError(imp.candidate_item_id,
                                   "impression of user " + imp.user_id);
    }
    if (imp.label != 0 && imp.label != 1) {
      throw ValidationError("impression label must be 0 or 1, got " +
                            std::to_string(imp.label));
    }
  }
}

bool operator==(const Dataset& a, const Dataset& b) {
  return *a.items_ == *b.items_ && *a.users_ == *b.users_ &&
         a.impressions_ == b.impressions_;
}

std::string SerializeItems(const Dataset& dataset) {
  std::string out(kItemsHeader);
  out += '\n';
  for (const auto& [id, item] : dataset.items()) {
    out += item.id;
    out += '\t';
    out += item.category;
    out += '\t';
    out += item.title;
    out += '\t';
    out += item.abstract_text;
    out += '\n';
  }
  return out;
}

std::string SerializeBehaviors(const Dataset& dataset) {
  std::string out(kBehaviorsHeader);
  out += '\n';
  const auto groups = dataset.GroupsByUser();
  auto group = groups.begin();
  for (const auto& [id, history] : dataset.users()) {
    out += id;
    out += '\t';
    for (std::size_t i = 0; i < history.item_ids.size(); ++i) {
      if (i) out += ' ';
      out += history.item_ids[i];
    }
    out += '\t';
    if (group != groups.end() && group->user_id == id) {
      bool first = true;
      for (const Impression& imp : group->impressions) {
        if (!first) out += ' ';
        first = false;
        out += imp.candidate_item_id;
        out += imp.label ? "-1" : "-0";
      }
      ++group;
    }
    out += '\n';
  }
  return out;
}

Dataset ParseDataset(std::string_view items_text,
                     std::string_view behaviors_text,
                     const std::string& items_name,
                     const std::string& behaviors_name) {
  ItemMap items;
  const auto item_lines = Lines(items_text);
  if (item_lines.empty() || item_lines.front().second != kItemsHeader) {
    throw ParseError(items_name, item_lines.empty() ? 1 : item_lines[0].first,
                     "missing items header");
  }
  for (std::size_t i = 1; i < item_lines.size(); ++i) {
    const auto [number, line] = item_lines[i];
    const auto fields = SplitOn(line, '\t');
    if (fields.size() != 4) {
      throw ParseError(items_name, number,
                       "expected 4 TAB-separated fields, got " +
                           std::to_string(fields.size()));
    }
    Item item{std::string(fields[0]), std::string(fields[2]),
              std::string(fields[3]), std::string(fields[1])};
    if (item.id.empty() || HasWhitespace(item.id)) {
      throw ParseError(items_name, number, "invalid item id");
    }
    if (item.title.empty()) {
      throw ParseError(items_name, number, "empty title");
    }
    std::string id = item.id;
    if (!items.emplace(id, std::move(item)).second) {
      throw ParseError(items_name, number, "duplicate item id \"" + id + "\"");
    }
  }

  HistoryMap users;
  std::vector<Impression> impressions;
  const auto behavior_lines = Lines(behaviors_text);
  if (behavior_lines.empty() ||
      behavior_lines.front().second != kBehaviorsHeader) {
    throw ParseError(behaviors_name,
                     behavior_lines.empty() ? 1 : behavior_lines[0].first,
                     "missing behaviors header");
  }
  for (std::size_t i = 1; i < behavior_lines.size(); ++i) {
    const auto [number, line] = behavior_lines[i];
    const auto fields = SplitOn(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(behaviors_name, number,
                       "expected 3 TAB-separated fields, got " +
                           std::to_string(fields.size()));
    }
    const std::string user_id(fields[0]);
    if (user_id.empty() || HasWhitespace(user_id)) {
      throw ParseError(behaviors_name, number, "invalid user id");
    }
    const std::string where = behaviors_name + ":" + std::to_string(number);
    ClickHistory history{user_id, {}};
    for (std::string_view id : SplitWords(fields[1])) {
      if (!items.contains(id)) {
        throw DanglingReferenceError(std::string(id), where);
      }
      history.item_ids.emplace_back(id);
    }
    for (std::string_view token : SplitWords(fields[2])) {
      const std::size_t dash = token.rfind('-');
      if (dash == std::string_view::npos || dash == 0 ||
          dash + 2 != token.size() ||
          (token.back() != '0' && token.back() != '1')) {
        throw ParseError(behaviors_name, number,
                         "malformed impression \"" + std::string(token) +
                             "\", expected itemid-0 or itemid-1");
      }
      const std::string_view id = token.substr(0, dash);
      if (!items.contains(id)) {
        throw DanglingReferenceError(std::string(id), where);
      }
      impressions.push_back({user_id, std::string(id), token.back() - '0'});
    }
    if (!users.emplace(user_id, std::move(history)).second) {
      throw ParseError(behaviors_name, number,
                       "duplicate user id \"" + user_id + "\"");
    }
  }
  return Dataset::Create(std::move(items), std::move(users),
                         std::move(impressions));
}

Dataset LoadDataset(const std::filesystem::path& items_path,
                    const std::filesystem::path& behaviors_path) {
  return ParseDataset(ReadFile(items_path), ReadFile(behaviors_path),
                      items_path.string(), behaviors_path.string());
}

void SaveDataset(const Dataset& dataset,
                 const std::filesystem::path& items_path,
                 const std::filesystem::path& behaviors_path) {
  dataset.Validate();
  const std::string items = SerializeItems(dataset);
  const std::string behaviors = SerializeBehaviors(dataset);
  WriteFile(items_path, items);
  WriteFile(behaviors_path, behaviors);
}

std::array<Dataset, 3> SplitDataset(const Dataset& dataset,
                                    const SplitRatios& ratios,
                                    std::uint64_t seed) {
  const std::array<double, 3> weights{ratios.train, ratios.validation,
                                      ratios.test};
  for (double w : weights) {
    if (!(w > 0.0)) throw ValidationError("split ratios must be positive");
  }
  if (std::abs(weights[0] + weights[1] + weights[2] - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1");
  }

  std::array<std::vector<Impression>, 3> parts;
  StreamApportioner size_stream(weights), positive_stream(weights);
  for (const ImpressionGroup& group : dataset.GroupsByUser()) {
    std::vector<std::size_t> positives, negatives;
    for (std::size_t i = 0; i < group.impressions.size(); ++i) {
      (group.impressions[i].label ? positives : negatives).push_back(i);
    }
    const auto sizes = size_stream.Take(group.impressions.size());
    auto pos = positive_stream.Take(positives.size());
    for (int k = 0; k < 3; ++k) {
      while (pos[k] > sizes[k]) {
        for (int j = 0; j < 3; ++j) {
          if (pos[j] < sizes[j]) {
            ++pos[j];
            --pos[k];
            break;
          }
        }
      }
    }
    Rng rng(HashCombine(seed, Fnv1a64(group.user_id)));
    rng.Shuffle(std::span<std::size_t>(positives));
    rng.Shuffle(std::span<std::size_t>(negatives));

    std::vector<int> part_of(group.impressions.size(), 0);
    std::size_t p = 0, n = 0;
    for (int k = 0; k < 3; ++k) {
      for (std::size_t c = 0; c < pos[k]; ++c) part_of[positives[p++]] = k;
      for (std::size_t c = 0; c < sizes[k] - pos[k]; ++c) {
        part_of[negatives[n++]] = k;
      }
    }
    for (std::size_t i = 0; i < group.impressions.size(); ++i) {
      parts[part_of[i]].push_back(group.impressions[i]);
    }
  }
  static constexpr const char* kNames[] = {"train", "validation", "test"};
  for (int k = 0; k < 3; ++k) {
    if (parts[k].empty()) {
      throw ValidationError(std::string("split leaves the ") + kNames[k] +
                            " part empty");
    }
  }
  return {Dataset::WithImpressions(dataset, std::move(parts[0])),
          Dataset::WithImpressions(dataset, std::move(parts[1])),
          Dataset::WithImpressions(dataset, std::move(parts[2]))};
}

double Density(std::size_t n_pos, std::size_t n_users, std::size_t n_items) {
  if (n_users == 0 || n_items == 0) return 0.0;
  return static_cast<double>(n_pos) /
         (static_cast<double>(n_users) * static_cast<double>(n_items));
}

DatasetStats ComputeStats(const Dataset& dataset, const Tokenizer& tokenizer) {
  DatasetStats stats;
  stats.n_items = dataset.items().size();
  stats.n_users = dataset.users().size();
  if (stats.n_items > 0) {
    std::size_t tokens = 0;
    for (const auto& [id, item] : dataset.items()) {
      tokens += tokenizer.CountTokens(item.Content());
    }
    stats.avg_tokens_per_item =
        static_cast<double>(tokens) / static_cast<double>(stats.n_items);
  }
  if (stats.n_users > 0) {
    std::size_t total = 0;
    for (const auto& [id, history] : dataset.users()) {
      total += history.item_ids.size();
    }
    stats.avg_history_len =
        static_cast<double>(total) / static_cast<double>(stats.n_users);
  }
  for (const Impression& imp : dataset.impressions()) {
    (imp.label ? stats.n_pos : stats.n_neg)++;
  }
  stats.density = Density(stats.n_pos, stats.n_users, stats.n_items);
  return stats;
}

SizeReport ComputeSizeReport(const Dataset& candidate,
                             const Dataset& reference) {
  auto ratio = [](std::size_t a, std::size_t b) {
    if (b == 0) return a == 0 ? 1.0 : 0.0;
    return static_cast<double>(a) / static_cast<double>(b);
  };
  SizeReport report;
  report.item_bytes = SerializeItems(candidate).size();
  report.user_bytes = SerializeBehaviors(candidate).size();
  report.overall_bytes = report.item_bytes + report.user_bytes;
  const std::size_t ref_items = SerializeItems(reference).size();
  const std::size_t ref_users = SerializeBehaviors(reference).size();
  report.item_ratio = ratio(report.item_bytes, ref_items);
  report.user_ratio = ratio(report.user_bytes, ref_users);
  report.overall_ratio = ratio(report.overall_bytes, ref_items + ref_users);
  return report;
}

}  // namespace recdc
