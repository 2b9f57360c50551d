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

#include "recdc/condenser.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <set>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "recdc/errors.h"
#include "recdc/random.h"

namespace recdc {
namespace {

double SquaredDistance(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::size_t> SeedPlusPlus(
    std::span<const std::vector<double>> points, std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::size_t> chosen{rng.UniformIndex(n)};
  std::vector<bool> is_chosen(n, false);
  is_chosen[chosen[0]] = true;
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    nearest[i] = SquaredDistance(points[i], points[chosen[0]]);
  }
  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!is_chosen[i]) total += nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.UniformDouble() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (is_chosen[i]) continue;
        acc += nearest[i];
        pick = i;
        if (acc > target && nearest[i] > 0.0) break;
      }
    } else {
      // Every remaining point duplicates a center.
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!is_chosen[i]) pick = i;
      }
    }
    chosen.push_back(pick);
    is_chosen[pick] = true;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(points[i], points[pick]));
    }
  }
  return chosen;
}

// Nearest-centroid assignment; returns whether any label changed.
bool Assign(std::span<const std::vector<double>> points,
            const std::vector<std::vector<double>>& centroids,
            std::vector<std::size_t>& assignments) {
  bool changed = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = SquaredDistance(points[i], centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      const double d = SquaredDistance(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (assignments[i] != best) {
      assignments[i] = best;
      changed = true;
    }
  }
  return changed;
}

// Refills empty clusters; returns whether anything moved.
bool RepairEmpty(std::span<const std::vector<double>> points,
                 std::vector<std::vector<double>>& centroids,
                 std::vector<std::size_t>& assignments) {
  const std::size_t k = centroids.size();
  bool repaired = false;
  while (true) {
    std::vector<std::size_t> counts(k, 0);
    std::vector<double> cluster_inertia(k, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++counts[assignments[i]];
      cluster_inertia[assignments[i]] +=
          SquaredDistance(points[i], centroids[assignments[i]]);
    }
    auto empty = std::find(counts.begin(), counts.end(), 0);
    if (empty == counts.end()) return repaired;
    std::size_t donor = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] < 2) continue;
      if (donor == k || cluster_inertia[c] > cluster_inertia[donor]) donor = c;
    }
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (assignments[i] != donor) continue;
      const double d = SquaredDistance(points[i], centroids[donor]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    const std::size_t target = static_cast<std::size_t>(empty - counts.begin());
    assignments[far] = target;
    centroids[target] = points[far];
    repaired = true;
  }
}

double Inertia(std::span<const std::vector<double>> points,
               const std::vector<std::vector<double>>& centroids,
               const std::vector<std::size_t>& assignments) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    s += SquaredDistance(points[i], centroids[assignments[i]]);
  }
  return s;
}

// Moves centroids to their members' means; returns the largest move.
double UpdateCentroids(std::span<const std::vector<double>> points,
                       std::vector<std::vector<double>>& centroids,
                       const std::vector<std::size_t>& assignments) {
  const std::size_t k = centroids.size();
  const std::size_t dim = centroids[0].size();
  std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& s = sums[assignments[i]];
    for (std::size_t j = 0; j < dim; ++j) s[j] += points[i][j];
    ++counts[assignments[i]];
  }
  double max_shift = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
    max_shift = std::max(max_shift, SquaredDistance(sums[c], centroids[c]));
    centroids[c] = std::move(sums[c]);
  }
  return std::sqrt(max_shift);
}

}  // namespace

KMeansResult KMeans(std::span<const std::vector<double>> points, std::size_t k,
                    const KMeansConfig& config) {
  if (k == 0) throw ValidationError("K must be at least 1");
  if (k > points.size()) {
    throw ValidationError("K = " + std::to_string(k) + " exceeds the " +
                          std::to_string(points.size()) + " points");
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ValidationError("mixed embedding dimensions");
  }

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(1, config.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(HashCombine(config.seed, r));
    KMeansResult run;
    run.restart = r;
    for (std::size_t idx : SeedPlusPlus(points, k, rng)) {
      run.centroids.push_back(points[idx]);
    }
    run.assignments.assign(points.size(), k);
    Assign(points, run.centroids, run.assignments);
    RepairEmpty(points, run.centroids, run.assignments);
    run.inertia_history.push_back(
        Inertia(points, run.centroids, run.assignments));
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
      const double shift =
          UpdateCentroids(points, run.centroids, run.assignments);
      bool changed = Assign(points, run.centroids, run.assignments);
      changed |= RepairEmpty(points, run.centroids, run.assignments);
      run.inertia_history.push_back(
          Inertia(points, run.centroids, run.assignments));
      if (!changed || shift <= config.tolerance) break;
    }
    run.inertia = run.inertia_history.back();
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

std::vector<std::vector<std::string>> ClusterModel::Members() const {
  std::vector<std::vector<std::string>> members(k);
  for (const std::string& id : user_ids) {
    members[assignments.find(id)->second].push_back(id);
  }
  return members;
}

ClusterModel ClusterUsers(const EmbeddingMap& user_embeddings, std::size_t k,
                          const KMeansConfig& config) {
  ClusterModel model;
  model.k = k;
  std::vector<std::vector<double>> points;
  points.reserve(user_embeddings.size());
  for (const auto& [id, embedding] : user_embeddings) {
    model.user_ids.push_back(id);
    points.push_back(embedding.values);
  }
  KMeansResult result = KMeans(points, k, config);
  for (std::size_t i = 0; i < model.user_ids.size(); ++i) {
    model.assignments.emplace(model.user_ids[i], result.assignments[i]);
  }
  model.centroids = std::move(result.centroids);
  model.inertia = result.inertia;
  model.inertia_history = std::move(result.inertia_history);
  return model;
}

std::vector<std::vector<double>> InterestCentroids(
    const ClusterModel& model, const EmbeddingMap& interest_embeddings) {
  std::vector<std::vector<double>> centroids(model.k);
  std::vector<std::size_t> counts(model.k, 0);
  for (const std::string& id : model.user_ids) {
    auto it = interest_embeddings.find(id);
    if (it == interest_embeddings.end()) {
      throw ValidationError("user " + id + " has no interest embedding");
    }
    const std::size_t c = model.assignments.find(id)->second;
    auto& sum = centroids[c];
    if (sum.empty()) sum.assign(it->second.dim(), 0.0);
    if (sum.size() != it->second.dim()) {
      throw ValidationError("mixed interest embedding dimensions");
    }
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += it->second.values[j];
    ++counts[c];
  }
  for (std::size_t c = 0; c < model.k; ++c) {
    for (double& v : centroids[c]) v /= static_cast<double>(counts[c]);
  }
  return centroids;
}

std::map<std::string, SelectionScore, std::less<>> SelectionScores(
    const ClusterModel& model, const EmbeddingMap& user_embeddings,
    const EmbeddingMap& interest_embeddings, double alpha) {
  if (!(alpha >= 0.0)) throw ValidationError("alpha must be >= 0");
  if (model.interest_centroids.size() != model.k) {
    throw ValidationError("cluster model lacks interest centroids");
  }
  std::map<std::string, SelectionScore, std::less<>> scores;
  for (const std::string& id : model.user_ids) {
    auto user = user_embeddings.find(id);
    auto interest = interest_embeddings.find(id);
    if (user == user_embeddings.end()) {
      throw ValidationError("user " + id + " has no user embedding");
    }
    if (interest == interest_embeddings.end()) {
      throw ValidationError("user " + id + " has no interest embedding");
    }
    SelectionScore s;
    s.user_id = id;
    s.cluster = model.assignments.find(id)->second;
    s.d_emb = Distance(user->second.values, model.centroids[s.cluster]);
    s.d_int =
        Distance(interest->second.values, model.interest_centroids[s.cluster]);
    s.d_u = s.d_emb + alpha * s.d_int;
    scores.emplace(id, std::move(s));
  }
  return scores;
}

std::vector<SyntheticUser> SynthesizeUsers(
    const ClusterModel& model,
    const std::map<std::string, SelectionScore, std::less<>>& scores,
    const HistoryMap& histories, std::size_t m) {
  if (m < 1) throw ValidationError("m must be at least 1");
  std::vector<SyntheticUser> users;
  const auto members = model.Members();
  for (std::size_t c = 0; c < model.k; ++c) {
    std::vector<const SelectionScore*> ranked;
    for (const std::string& id : members[c]) {
      auto it = scores.find(id);
      if (it == scores.end()) {
        throw ValidationError("user " + id + " has no selection score");
      }
      ranked.push_back(&it->second);
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const SelectionScore* a, const SelectionScore* b) {
                if (a->d_u != b->d_u) return a->d_u < b->d_u;
                return a->user_id < b->user_id;
              });
    SyntheticUser user;
    user.id = "syn-" + std::to_string(c);
    user.cluster = c;
    user.history.user_id = user.id;
    std::unordered_set<std::string> seen;
    const std::size_t take = std::min(m, ranked.size());
    for (std::size_t i = 0; i < take; ++i) {
      user.members.push_back(ranked[i]->user_id);
      user.member_scores.push_back(ranked[i]->d_u);
      auto h = histories.find(ranked[i]->user_id);
      if (h == histories.end()) {
        throw DanglingReferenceError(ranked[i]->user_id, "history synthesis");
      }
      for (const std::string& item : h->second.item_ids) {
        if (seen.insert(item).second) user.history.item_ids.push_back(item);
      }
    }
    users.push_back(std::move(user));
  }
  return users;
}

void CondenseConfig::Validate() const {
  if (k < 1) throw ValidationError("K must be at least 1");
  if (m < 1) throw ValidationError("m must be at least 1");
  if (!(alpha >= 0.0)) throw ValidationError("alpha must be >= 0");
  if (negative_ratio < 1) throw ValidationError("negative ratio must be >= 1");
}

ContentCondensation CondenseContents(const ItemMap& items,
                                     const PromptTemplate& prompt,
                                     LlmBackend& backend) {
  std::vector<const Item*> order;
  order.reserve(items.size());
  for (const auto& [id, item] : items) order.push_back(&item);
  std::vector<std::string> titles(order.size());
  std::vector<char> failed(order.size(), 0);
  ParallelFor(order.size(), backend.max_in_flight(), [&](std::size_t i) {
    try {
      titles[i] = CondenseItem(backend, prompt, *order[i]);
    } catch (const Error& e) {
      spdlog::warn("item {} kept its original title: {}", order[i]->id,
                   e.what());
      failed[i] = 1;
    }
  });
  ContentCondensation out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::string title = failed[i] ? order[i]->title : std::move(titles[i]);
    // Titles cannot carry field or record separators.
    for (char& ch : title) {
      if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
    }
    if (failed[i]) out.failed_ids.push_back(order[i]->id);
    out.items.emplace(order[i]->id, Item{order[i]->id, std::move(title), "", ""});
  }
  return out;
}

CondensationResult Condense(const Dataset& train, const CondenseConfig& config,
                            const CondensePrompts& prompts,
                            LlmBackend& backend,
                            const RecModelParams& rec_params,
                            const TextEncoder& encoder) {
  config.Validate();
  CondensationResult result;

  std::vector<const ClickHistory*> users;
  for (const auto& [id, history] : train.users()) {
    if (history.item_ids.empty()) {
      ++result.users_without_history;
    } else {
      users.push_back(&history);
    }
  }
  if (config.k > users.size()) {
    throw ValidationError("K = " + std::to_string(config.k) + " exceeds the " +
                          std::to_string(users.size()) +
                          " users with a click history");
  }

  // Interests and their pooled text embeddings.
  std::vector<Embedding> interest_vectors(users.size());
  ParallelFor(users.size(), backend.max_in_flight(), [&](std::size_t i) {
    const auto interests =
        ExtractInterests(backend, prompts.interest, *users[i], train.items());
    std::vector<Embedding> encoded;
    encoded.reserve(interests.size());
    for (const std::string& phrase : interests) {
      encoded.push_back(encoder.Encode(phrase));
    }
    interest_vectors[i] = Pool(encoded);
  });
  for (std::size_t i = 0; i < users.size(); ++i) {
    result.interest_embeddings.emplace(users[i]->user_id,
                                       std::move(interest_vectors[i]));
    result.user_embeddings.emplace(
        users[i]->user_id, UserEmbedding(rec_params, *users[i], train.items()));
  }

  KMeansConfig kmeans = config.kmeans;
  kmeans.seed = HashCombine(config.seed, kmeans.seed);
  result.model = ClusterUsers(result.user_embeddings, config.k, kmeans);
  result.model.interest_centroids =
      InterestCentroids(result.model, result.interest_embeddings);
  result.scores = SelectionScores(result.model, result.user_embeddings,
                                  result.interest_embeddings, config.alpha);
  result.synthetic_users =
      SynthesizeUsers(result.model, result.scores, train.users(), config.m);

  // Impressions of the synthetic users.
  std::vector<Impression> impressions;
  const auto groups = train.GroupsByUser();
  std::map<std::string_view, std::span<const Impression>> by_user;
  for (const ImpressionGroup& g : groups) by_user.emplace(g.user_id, g.impressions);
  std::vector<std::string> all_items;
  for (const auto& [id, item] : train.items()) all_items.push_back(id);
  for (const SyntheticUser& user : result.synthetic_users) {
    std::unordered_set<std::string> seen;
    if (config.impressions == SyntheticImpressions::kPoolMembers) {
      for (const std::string& member : user.members) {
        auto it = by_user.find(member);
        if (it == by_user.end()) continue;
        for (const Impression& imp : it->second) {
          if (seen.insert(imp.candidate_item_id).second) {
            impressions.push_back({user.id, imp.candidate_item_id, imp.label});
          }
        }
      }
    } else {
      const std::unordered_set<std::string> clicked(
          user.history.item_ids.begin(), user.history.item_ids.end());
      Rng rng(HashCombine(config.seed, Fnv1a64(user.id)));
      for (const std::string& item : user.history.item_ids) {
        impressions.push_back({user.id, item, 1});
      }
      if (clicked.size() < all_items.size()) {
        for (std::size_t n = 0; n < config.negative_ratio * clicked.size();
             ++n) {
          const std::string& pick = all_items[rng.UniformIndex(all_items.size())];
          if (clicked.contains(pick) || !seen.insert(pick).second) continue;
          impressions.push_back({user.id, pick, 0});
        }
      }
    }
  }

  // Condense only items the synthetic data still references.
  ItemMap referenced;
  auto keep = [&](const std::string& id) {
    if (!referenced.contains(id)) referenced.emplace(id, train.item(id));
  };
  for (const SyntheticUser& user : result.synthetic_users) {
    for (const std::string& id : user.history.item_ids) keep(id);
  }
  for (const Impression& imp : impressions) keep(imp.candidate_item_id);
  ContentCondensation condensed =
      CondenseContents(referenced, prompts.content, backend);
  result.failed_items = std::move(condensed.failed_ids);

  HistoryMap histories;
  for (const SyntheticUser& user : result.synthetic_users) {
    histories.emplace(user.id, user.history);
  }
  result.dataset = Dataset::Create(std::move(condensed.items),
                                   std::move(histories), std::move(impressions));
  return result;
}

std::string SerializeProvenance(std::span<const SyntheticUser> users) {
  std::string out;
  char buf[64];
  for (const SyntheticUser& user : users) {
    out += user.id;
    out += '\t';
    for (std::size_t i = 0; i < user.members.size(); ++i) {
      if (i) out += ',';
      out += user.members[i];
    }
    out += '\t';
    for (std::size_t i = 0; i < user.member_scores.size(); ++i) {
      if (i) out += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", user.member_scores[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace recdc
