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

#ifndef RECDC_DATASET_H_
#define RECDC_DATASET_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recdc/text.h"

namespace recdc {

struct Item {
  std::string id;
  std::string title;
  std::string abstract_text;  // may be empty
  std::string category;       // may be empty

  // title, abstract and category joined into one sequence, in that order,
  // skipping empty fields.
  std::string Content() const;

  friend bool operator==(const Item&, const Item&) = default;
};

// Ordered set of clicked item ids. Duplicates are dropped on construction
// of a Dataset, keeping the first occurrence.
struct ClickHistory {
  std::string user_id;
  std::vector<std::string> item_ids;

  friend bool operator==(const ClickHistory&, const ClickHistory&) = default;
};

struct Impression {
  std::string user_id;
  std::string candidate_item_id;
  int label = 0;  // 1 = clicked

  friend bool operator==(const Impression&, const Impression&) = default;
};

using ItemMap = std::map<std::string, Item, std::less<>>;
using HistoryMap = std::map<std::string, ClickHistory, std::less<>>;

// The impressions of one user, in dataset order.
struct ImpressionGroup {
  std::string_view user_id;
  std::span<const Impression> impressions;
};

// Items, user histories and labeled impressions. Immutable once built and
// cheap to copy: item and user tables are shared between copies, and
// between the parts produced by SplitDataset.
//
// Canonical form: histories hold no duplicates, impressions are grouped by
// user in user-id order (stable within a user).
class Dataset {
 public:
  Dataset();

  // Validates referential integrity and canonicalizes. Throws
  // ValidationError / DanglingReferenceError.
  static Dataset Create(ItemMap items, HistoryMap users,
                        std::vector<Impression> impressions);

  // Canonicalizes only; callers guarantee integrity. SaveDataset still
  // validates before writing.
  static Dataset CreateUnchecked(ItemMap items, HistoryMap users,
                                 std::vector<Impression> impressions);

  // Same item and user tables as `base` with a different impression list.
  static Dataset WithImpressions(const Dataset& base,
                                 std::vector<Impression> impressions);

  const ItemMap& items() const { return *items_; }
  const HistoryMap& users() const { return *users_; }
  const std::vector<Impression>& impressions() const { return impressions_; }

  const Item& item(std::string_view id) const;
  const ClickHistory& history(std::string_view user_id) const;

  std::vector<ImpressionGroup> GroupsByUser() const;

  // Throws the first violated invariant, if any.
  void Validate() const;

  bool SharesTablesWith(const Dataset& other) const {
    return items_ == other.items_ && users_ == other.users_;
  }

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  std::shared_ptr<const ItemMap> items_;
  std::shared_ptr<const HistoryMap> users_;
  std::vector<Impression> impressions_;
};

// Tab-separated on-disk form.
//   items:      item_id<TAB>category<TAB>title<TAB>abstract
//   behaviors:  user_id<TAB>h1 h2 ...<TAB>cand1-1 cand2-0 ...
// Both files start with a header line.
inline constexpr std::string_view kItemsHeader =
    "item_id\tcategory\ttitle\tabstract";
inline constexpr std::string_view kBehaviorsHeader =
    "user_id\thistory\timpressions";

std::string SerializeItems(const Dataset& dataset);
std::string SerializeBehaviors(const Dataset& dataset);

Dataset ParseDataset(std::string_view items_text,
                     std::string_view behaviors_text,
                     const std::string& items_name = "items",
                     const std::string& behaviors_name = "behaviors");

Dataset LoadDataset(const std::filesystem::path& items_path,
                    const std::filesystem::path& behaviors_path);

// Validates before touching the filesystem.
void SaveDataset(const Dataset& dataset,
                 const std::filesystem::path& items_path,
                 const std::filesystem::path& behaviors_path);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

// Partitions impressions per user into train/validation/test. Per-user
// part sizes come from one running apportionment across users (in user-id
// order), so global shares stay within one impression of exact and a user
// whose impressions start and end on a multiple of 10 splits 8/1/1. Positives are apportioned the same way
// inside those sizes, so every part sees both labels where counts allow.
// Which impression lands where is drawn from `seed`; each part keeps the
// input order. Items and histories are shared.
std::array<Dataset, 3> SplitDataset(const Dataset& dataset,
                                    const SplitRatios& ratios,
                                    std::uint64_t seed);

struct DatasetStats {
  std::size_t n_items = 0;
  std::size_t n_users = 0;
  double avg_tokens_per_item = 0.0;
  double avg_history_len = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  double density = 0.0;
};

// n_pos / (n_users * n_items), 0 for an empty dataset.
double Density(std::size_t n_pos, std::size_t n_users, std::size_t n_items);

DatasetStats ComputeStats(const Dataset& dataset,
                          const Tokenizer& tokenizer = Tokenizer());

struct SizeReport {
  std::size_t item_bytes = 0;
  std::size_t user_bytes = 0;
  std::size_t overall_bytes = 0;
  double item_ratio = 0.0;
  double user_ratio = 0.0;
  double overall_ratio = 0.0;
};

// Byte counts of the serialized item and behaviors files; ratios are
// candidate over reference.
SizeReport ComputeSizeReport(const Dataset& candidate,
                             const Dataset& reference);

}  // namespace recdc

#endif  // RECDC_DATASET_H_
