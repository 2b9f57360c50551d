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

#ifndef RECDC_TESTS_ORACLES_H_
#define RECDC_TESTS_ORACLES_H_

// Independent reference implementations used as test oracles. They follow
// the documented definitions with plain loops and share no code with the
// library beyond its data types.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recdc/dataset.h"
#include "recdc/rec_model.h"

namespace recdc::oracle {

std::uint64_t Fnv1a(std::string_view s);
std::uint64_t SplitMix(std::uint64_t x);

std::vector<std::string> Words(std::string_view text);

// Hashed (1 + ln tf) bag of words, L2-normalized.
std::vector<double> HashedTf(std::string_view text, std::size_t dim);

double Dot(std::span<const double> a, std::span<const double> b);
double Cosine(std::span<const double> a, std::span<const double> b);
double Euclid(std::span<const double> a, std::span<const double> b);

// Recommender forward pass written out element by element.
std::vector<double> ItemVector(const RecModelParams& p, const Item& item);
std::vector<double> ProjectedItem(const RecModelParams& p, const Item& item);
std::vector<double> UserVector(const RecModelParams& p,
                               const std::vector<std::string>& history,
                               const ItemMap& items);
double ScorePair(const RecModelParams& p,
                 const std::vector<std::string>& history,
                 const Item& candidate, const ItemMap& items);
// Mean -log softmax(score)[0] over the groups.
double GroupLoss(const RecModelParams& p, std::span<const TrainGroup> groups,
                 const ItemMap& items);

// Ranking metrics from their textbook definitions.
double Ndcg(const std::vector<int>& ranked, std::size_t k);
double Recall(const std::vector<int>& ranked, std::size_t k);

struct BruteMetrics {
  std::vector<double> ndcg;
  std::vector<double> recall;
  std::size_t groups = 0;
};
BruteMetrics Evaluate(const RecModelParams& p, const Dataset& test,
                      const std::vector<std::size_t>& cutoffs);

// Adjusted Rand index by explicit pair counting.
double Ari(const std::vector<std::size_t>& a,
           const std::vector<std::size_t>& b);

}  // namespace recdc::oracle

#endif  // RECDC_TESTS_ORACLES_H_
