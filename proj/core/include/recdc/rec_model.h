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

#ifndef RECDC_REC_MODEL_H_
#define RECDC_REC_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recdc/dataset.h"
#include "recdc/text.h"

namespace recdc {

struct RecModelShape {
  std::size_t buckets = 8192;       // hashed vocabulary rows
  std::size_t content_dim = 256;
  std::size_t user_dim = 64;

  friend bool operator==(const RecModelShape&, const RecModelShape&) = default;
};

// Parameters of the content-based recommender.
//
// Item encoder: tokens of title+abstract+category are hashed into rows of
// `token_embedding`; an additive attention with query `content_attention`
// pools the rows into a content_dim vector.
//
// User encoder: each history item is projected to user_dim by
// `projection` (content_dim x user_dim, row-major), then pooled with a
// second attention whose query is `user_attention`.
//
// Score: dot(user vector, projected candidate vector).
struct RecModelParams {
  RecModelShape shape;
  std::vector<double> token_embedding;    // buckets x content_dim
  std::vector<double> content_attention;  // content_dim
  std::vector<double> user_attention;     // user_dim
  std::vector<double> projection;         // content_dim x user_dim

  static RecModelParams Zeros(const RecModelShape& shape);
  // Uniform(-init_scale, init_scale) everywhere except the projection,
  // which uses Glorot-uniform bounds.
  static RecModelParams Random(const RecModelShape& shape, std::uint64_t seed,
                               double init_scale = 0.1);

  bool AllFinite() const;

  friend bool operator==(const RecModelParams&,
                         const RecModelParams&) = default;
};

// Hashed token rows of an item's concatenated content.
std::vector<std::uint32_t> ItemTokenRows(const Item& item,
                                         std::size_t buckets);

// Precomputed ItemTokenRows for every item of a table.
class TokenCache {
 public:
  TokenCache(const ItemMap& items, std::size_t buckets);
  const std::vector<std::uint32_t>& rows(std::string_view item_id) const;

 private:
  std::unordered_map<std::string, std::vector<std::uint32_t>> rows_;
};

// content_dim vector; empty content gives the zero vector.
Embedding EncodeItem(const RecModelParams& params, const Item& item);

// user_dim vector. Throws std::invalid_argument on an empty history and
// DanglingReferenceError on an unknown item id.
Embedding UserEmbedding(const RecModelParams& params,
                        const ClickHistory& history, const ItemMap& items);

double Score(const RecModelParams& params, const ClickHistory& history,
             const Item& candidate, const ItemMap& items);

// Scores several candidates against one history, encoding the history once.
std::vector<double> ScoreCandidates(const RecModelParams& params,
                                    const ClickHistory& history,
                                    std::span<const std::string> candidates,
                                    const ItemMap& items,
                                    const TokenCache* cache = nullptr);

// One sampled-softmax training example: candidates[0] is the clicked item.
struct TrainGroup {
  std::vector<std::string> history;
  std::vector<std::string> candidates;
};

// Gradient of the loss; embedding rows are stored sparsely.
struct RecModelGradient {
  std::map<std::uint32_t, std::vector<double>> token_embedding_rows;
  std::vector<double> content_attention;
  std::vector<double> user_attention;
  std::vector<double> projection;
};

// Mean cross-entropy of the clicked item over the groups, and its exact
// gradient.
double LossAndGradient(const RecModelParams& params,
                       std::span<const TrainGroup> groups,
                       const TokenCache& cache, RecModelGradient* gradient);

double Loss(const RecModelParams& params, std::span<const TrainGroup> groups,
            const TokenCache& cache);

struct TrainConfig {
  RecModelShape shape;
  double learning_rate = 5e-3;
  std::size_t negative_ratio = 4;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double init_scale = 0.1;

  // Throws ValidationError.
  void Validate() const;
};

struct TrainResult {
  RecModelParams params;
  std::vector<double> epoch_losses;  // mean batch loss per epoch
  std::size_t groups_per_epoch = 0;
  std::size_t skipped_positives = 0;  // positives of users without history
};

// Builds the per-epoch groups: one per positive impression, with
// negative_ratio negatives drawn from the same user's negative impressions
// (without replacement when enough exist), or from unclicked items when the
// user has none.
std::vector<TrainGroup> SampleTrainGroups(const Dataset& dataset,
                                          std::size_t negative_ratio,
                                          std::uint64_t seed);

// Mini-batch Adam on the sampled-softmax loss. The embedding table uses the
// sparse (lazy) variant: only rows present in a batch are updated. Throws
// TrainingError when there is nothing to train on or the loss diverges.
TrainResult Train(const Dataset& dataset, const TrainConfig& config);

// Binary params file: "RDCPARAM", u32 version, u64 buckets, content_dim,
// user_dim, then little-endian float64 blocks in declaration order.
void SaveParams(const RecModelParams& params,
                const std::filesystem::path& path);
RecModelParams LoadParams(const std::filesystem::path& path);

}  // namespace recdc

#endif  // RECDC_REC_MODEL_H_
