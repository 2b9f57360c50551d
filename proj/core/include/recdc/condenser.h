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

#ifndef RECDC_CONDENSER_H_
#define RECDC_CONDENSER_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recdc/dataset.h"
#include "recdc/llm.h"
#include "recdc/rec_model.h"
#include "recdc/text.h"

namespace recdc {

struct KMeansConfig {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // stop once no centroid moves farther
  std::size_t restarts = 4;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  // Inertia after every assignment step of the kept restart.
  std::vector<double> inertia_history;
  std::size_t restart = 0;
};

// k-means++ seeding, Lloyd iterations, best-inertia restart kept. An empty
// cluster takes the point farthest from its centroid in the cluster with
// the highest inertia. Ties in assignment go to the lowest centroid index.
// Throws ValidationError unless 1 <= k <= points.size().
KMeansResult KMeans(std::span<const std::vector<double>> points, std::size_t k,
                    const KMeansConfig& config);

using EmbeddingMap = std::map<std::string, Embedding, std::less<>>;

struct ClusterModel {
  std::size_t k = 0;
  std::vector<std::string> user_ids;  // sorted; row order of the clustering
  std::vector<std::vector<double>> centroids;
  std::map<std::string, std::size_t, std::less<>> assignments;
  std::vector<std::vector<double>> interest_centroids;
  double inertia = 0.0;
  std::vector<double> inertia_history;

  // Member ids per cluster, sorted.
  std::vector<std::vector<std::string>> Members() const;
};

ClusterModel ClusterUsers(const EmbeddingMap& user_embeddings, std::size_t k,
                          const KMeansConfig& config);

// Per-cluster arithmetic mean of the members' interest embeddings. Throws
// ValidationError naming the first member without one.
std::vector<std::vector<double>> InterestCentroids(
    const ClusterModel& model, const EmbeddingMap& interest_embeddings);

struct SelectionScore {
  std::string user_id;
  std::size_t cluster = 0;
  double d_emb = 0.0;  // distance to the user-embedding centroid
  double d_int = 0.0;  // distance to the interest centroid
  double d_u = 0.0;    // d_emb + alpha * d_int
};

// `model.interest_centroids` must be filled. Throws ValidationError for a
// negative alpha.
std::map<std::string, SelectionScore, std::less<>> SelectionScores(
    const ClusterModel& model, const EmbeddingMap& user_embeddings,
    const EmbeddingMap& interest_embeddings, double alpha);

struct SyntheticUser {
  std::string id;  // "syn-<cluster>"
  std::size_t cluster = 0;
  std::vector<std::string> members;      // ascending selection score
  std::vector<double> member_scores;     // d_u of each member
  ClickHistory history;
};

// One synthetic user per cluster. Members are ordered by ascending d_u
// (ties by user id); the history is the first-seen-order union of the
// first min(m, cluster size) members' histories.
std::vector<SyntheticUser> SynthesizeUsers(
    const ClusterModel& model,
    const std::map<std::string, SelectionScore, std::less<>>& scores,
    const HistoryMap& histories, std::size_t m);

enum class SyntheticImpressions {
  // Source members' impressions, candidates de-duplicated keeping the first
  // label.
  kPoolMembers,
  // Synthetic history items as positives plus sampled unclicked negatives.
  kHistoryPositives,
};

struct CondenseConfig {
  std::size_t k = 8;
  std::size_t m = 5;
  double alpha = 0.2;
  KMeansConfig kmeans;
  SyntheticImpressions impressions = SyntheticImpressions::kPoolMembers;
  std::size_t negative_ratio = 4;  // kHistoryPositives only
  std::uint64_t seed = 0;

  void Validate() const;
};

struct ContentCondensation {
  ItemMap items;
  std::vector<std::string> failed_ids;  // kept their original title
};

// Every item becomes {id, condensed title, "", ""}.
ContentCondensation CondenseContents(const ItemMap& items,
                                     const PromptTemplate& prompt,
                                     LlmBackend& backend);

struct CondensePrompts {
  PromptTemplate content = DefaultCondensePrompt();
  PromptTemplate interest = DefaultInterestPrompt();
};

struct CondensationResult {
  Dataset dataset;
  std::vector<SyntheticUser> synthetic_users;  // provenance
  ClusterModel model;
  std::map<std::string, SelectionScore, std::less<>> scores;
  EmbeddingMap user_embeddings;
  EmbeddingMap interest_embeddings;
  std::vector<std::string> failed_items;
  std::size_t users_without_history = 0;
};

// The full condensation: interests per user, user and interest embeddings,
// clustering, selection scores, history synthesis, then condensed contents
// for every item a synthetic user still references. `rec_params` should be
// trained on `train`.
CondensationResult Condense(const Dataset& train, const CondenseConfig& config,
                            const CondensePrompts& prompts,
                            LlmBackend& backend,
                            const RecModelParams& rec_params,
                            const TextEncoder& encoder = TextEncoder());

// syn-<k><TAB>member1,member2,...<TAB>d_u1,d_u2,...
std::string SerializeProvenance(std::span<const SyntheticUser> users);

}  // namespace recdc

#endif  // RECDC_CONDENSER_H_
