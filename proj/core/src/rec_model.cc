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

#include "recdc/rec_model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "recdc/errors.h"
#include "recdc/random.h"

namespace recdc {
namespace {

// Forward state of one item through the content encoder and projection.
struct ItemPass {
  const std::vector<std::uint32_t>* rows = nullptr;
  std::vector<double> weights;    // token attention
  std::vector<double> content;    // content_dim
  std::vector<double> projected;  // user_dim
};

struct UserPass {
  std::vector<ItemPass> items;
  std::vector<double> weights;  // history attention
  std::vector<double> user;     // user_dim
};

double Dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// In-place softmax; returns nothing for an empty input.
void Softmax(std::vector<double>& x) {
  if (x.empty()) return;
  const double m = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (double& v : x) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : x) v /= sum;
}

void ForwardItem(const RecModelParams& p,
                 const std::vector<std::uint32_t>& rows, ItemPass& out) {
  const std::size_t dc = p.shape.content_dim;
  const std::size_t du = p.shape.user_dim;
  out.rows = &rows;
  out.content.assign(dc, 0.0);
  out.projected.assign(du, 0.0);
  out.weights.resize(rows.size());
  if (rows.empty()) return;
  const double* q = p.content_attention.data();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    out.weights[j] = Dot(q, &p.token_embedding[rows[j] * dc], dc);
  }
  Softmax(out.weights);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const double w = out.weights[j];
    const double* e = &p.token_embedding[rows[j] * dc];
    for (std::size_t k = 0; k < dc; ++k) out.content[k] += w * e[k];
  }
  const double* W = p.projection.data();
  for (std::size_t k = 0; k < dc; ++k) {
    const double v = out.content[k];
    if (v == 0.0) continue;
    const double* row = W + k * du;
    for (std::size_t u = 0; u < du; ++u) out.projected[u] += v * row[u];
  }
}

void ForwardUser(const RecModelParams& p,
                 std::span<const std::vector<std::uint32_t>* const> history,
                 UserPass& out) {
  const std::size_t du = p.shape.user_dim;
  out.items.resize(history.size());
  out.weights.resize(history.size());
  out.user.assign(du, 0.0);
  for (std::size_t i = 0; i < history.size(); ++i) {
    ForwardItem(p, *history[i], out.items[i]);
    out.weights[i] =
        Dot(p.user_attention.data(), out.items[i].projected.data(), du);
  }
  Softmax(out.weights);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double a = out.weights[i];
    for (std::size_t u = 0; u < du; ++u) {
      out.user[u] += a * out.items[i].projected[u];
    }
  }
}

void BackwardItem(const RecModelParams& p, const ItemPass& pass,
                  const std::vector<double>& grad_projected,
                  RecModelGradient& g) {
  const std::size_t dc = p.shape.content_dim;
  const std::size_t du = p.shape.user_dim;
  std::vector<double> grad_content(dc, 0.0);
  const double* W = p.projection.data();
  for (std::size_t k = 0; k < dc; ++k) {
    const double v = pass.content[k];
    double* gw = &g.projection[k * du];
    const double* w = W + k * du;
    double acc = 0.0;
    for (std::size_t u = 0; u < du; ++u) {
      gw[u] += v * grad_projected[u];
      acc += w[u] * grad_projected[u];
    }
    grad_content[k] = acc;
  }
  const auto& rows = *pass.rows;
  if (rows.empty()) return;
  const double vg = Dot(pass.content.data(), grad_content.data(), dc);
  const double* q = p.content_attention.data();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const double* e = &p.token_embedding[rows[j] * dc];
    const double w = pass.weights[j];
    const double grad_logit = w * (Dot(e, grad_content.data(), dc) - vg);
    auto [it, inserted] = g.token_embedding_rows.try_emplace(rows[j]);
    if (inserted) it->second.assign(dc, 0.0);
    double* ge = it->second.data();
    for (std::size_t k = 0; k < dc; ++k) {
      ge[k] += w * grad_content[k] + grad_logit * q[k];
      g.content_attention[k] += grad_logit * e[k];
    }
  }
}

void BackwardUser(const RecModelParams& p, const UserPass& pass,
                  const std::vector<double>& grad_user, RecModelGradient& g) {
  const std::size_t du = p.shape.user_dim;
  const double zg = Dot(pass.user.data(), grad_user.data(), du);
  std::vector<double> grad_projected(du);
  for (std::size_t i = 0; i < pass.items.size(); ++i) {
    const auto& proj = pass.items[i].projected;
    const double a = pass.weights[i];
    const double grad_logit = a * (Dot(proj.data(), grad_user.data(), du) - zg);
    for (std::size_t u = 0; u < du; ++u) {
      grad_projected[u] = a * grad_user[u] + grad_logit * p.user_attention[u];
      g.user_attention[u] += grad_logit * proj[u];
    }
    BackwardItem(p, pass.items[i], grad_projected, g);
  }
}

std::vector<const std::vector<std::uint32_t>*> HistoryRows(
    const TokenCache& cache, std::span<const std::string> ids) {
  std::vector<const std::vector<std::uint32_t>*> rows;
  rows.reserve(ids.size());
  for (const std::string& id : ids) rows.push_back(&cache.rows(id));
  return rows;
}

void CheckShape(const RecModelShape& s) {
  if (s.buckets == 0 || s.content_dim == 0 || s.user_dim == 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (s.buckets > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("too many embedding buckets");
  }
}

}  // namespace

RecModelParams RecModelParams::Zeros(const RecModelShape& shape) {
  CheckShape(shape);
  RecModelParams p;
  p.shape = shape;
  p.token_embedding.assign(shape.buckets * shape.content_dim, 0.0);
  p.content_attention.assign(shape.content_dim, 0.0);
  p.user_attention.assign(shape.user_dim, 0.0);
  p.projection.assign(shape.content_dim * shape.user_dim, 0.0);
  return p;
}

RecModelParams RecModelParams::Random(const RecModelShape& shape,
                                      std::uint64_t seed, double init_scale) {
  RecModelParams p = Zeros(shape);
  Rng rng(seed);
  for (double& v : p.token_embedding) v = rng.Uniform(-init_scale, init_scale);
  for (double& v : p.content_attention) {
    v = rng.Uniform(-init_scale, init_scale);
  }
  for (double& v : p.user_attention) v = rng.Uniform(-init_scale, init_scale);
  const double bound =
      std::sqrt(6.0 / static_cast<double>(shape.content_dim + shape.user_dim));
  for (double& v : p.projection) v = rng.Uniform(-bound, bound);
  return p;
}

bool RecModelParams::AllFinite() const {
  for (const auto* block : {&token_embedding, &content_attention,
                            &user_attention, &projection}) {
    for (double v : *block) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::vector<std::uint32_t> ItemTokenRows(const Item& item,
                                         std::size_t buckets) {
  std::vector<std::uint32_t> rows;
  for (const std::string& token : Tokenizer().Tokenize(item.Content())) {
    rows.push_back(static_cast<std::uint32_t>(HashToken(token, buckets).bucket));
  }
  return rows;
}

TokenCache::TokenCache(const ItemMap& items, std::size_t buckets) {
  rows_.reserve(items.size());
  for (const auto& [id, item] : items) {
    rows_.emplace(id, ItemTokenRows(item, buckets));
  }
}

const std::vector<std::uint32_t>& TokenCache::rows(
    std::string_view item_id) const {
  auto it = rows_.find(std::string(item_id));
  if (it == rows_.end()) {
    throw DanglingReferenceError(std::string(item_id), "token cache");
  }
  return it->second;
}

Embedding EncodeItem(const RecModelParams& params, const Item& item) {
  const auto rows = ItemTokenRows(item, params.shape.buckets);
  ItemPass pass;
  ForwardItem(params, rows, pass);
  return Embedding(std::move(pass.content));
}

namespace {

UserPass RunUser(const RecModelParams& params, const ClickHistory& history,
                 const ItemMap& items, const TokenCache* cache,
                 std::vector<std::vector<std::uint32_t>>& storage) {
  if (history.item_ids.empty()) {
    throw std::invalid_argument("user " + history.user_id +
                                " has an empty history");
  }
  std::vector<const std::vector<std::uint32_t>*> rows;
  if (cache != nullptr) {
    rows = HistoryRows(*cache, history.item_ids);
  } else {
    storage.reserve(history.item_ids.size());
    for (const std::string& id : history.item_ids) {
      auto it = items.find(id);
      if (it == items.end()) {
        throw DanglingReferenceError(id, "history of user " + history.user_id);
      }
      storage.push_back(ItemTokenRows(it->second, params.shape.buckets));
    }
    for (const auto& r : storage) rows.push_back(&r);
  }
  UserPass pass;
  ForwardUser(params, rows, pass);
  return pass;
}

}  // namespace

Embedding UserEmbedding(const RecModelParams& params,
                        const ClickHistory& history, const ItemMap& items) {
  std::vector<std::vector<std::uint32_t>> storage;
  UserPass pass = RunUser(params, history, items, nullptr, storage);
  return Embedding(std::move(pass.user));
}

double Score(const RecModelParams& params, const ClickHistory& history,
             const Item& candidate, const ItemMap& items) {
  std::vector<std::vector<std::uint32_t>> storage;
  const UserPass user = RunUser(params, history, items, nullptr, storage);
  const auto rows = ItemTokenRows(candidate, params.shape.buckets);
  ItemPass pass;
  ForwardItem(params, rows, pass);
  return Dot(user.user.data(), pass.projected.data(), params.shape.user_dim);
}

std::vector<double> ScoreCandidates(const RecModelParams& params,
                                    const ClickHistory& history,
                                    std::span<const std::string> candidates,
                                    const ItemMap& items,
                                    const TokenCache* cache) {
  std::vector<std::vector<std::uint32_t>> storage;
  const UserPass user = RunUser(params, history, items, cache, storage);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  ItemPass pass;
  std::vector<std::uint32_t> local_rows;
  for (const std::string& id : candidates) {
    const std::vector<std::uint32_t>* rows;
    if (cache != nullptr) {
      rows = &cache->rows(id);
    } else {
      auto it = items.find(id);
      if (it == items.end()) throw DanglingReferenceError(id, "candidate");
      local_rows = ItemTokenRows(it->second, params.shape.buckets);
      rows = &local_rows;
    }
    ForwardItem(params, *rows, pass);
    scores.push_back(
        Dot(user.user.data(), pass.projected.data(), params.shape.user_dim));
  }
  return scores;
}

double LossAndGradient(const RecModelParams& params,
                       std::span<const TrainGroup> groups,
                       const TokenCache& cache, RecModelGradient* gradient) {
  const std::size_t du = params.shape.user_dim;
  if (gradient != nullptr) {
    gradient->token_embedding_rows.clear();
    gradient->content_attention.assign(params.shape.content_dim, 0.0);
    gradient->user_attention.assign(du, 0.0);
    gradient->projection.assign(params.shape.content_dim * du, 0.0);
  }
  if (groups.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(groups.size());
  double total = 0.0;
  UserPass user;
  std::vector<ItemPass> candidates;
  std::vector<double> scores, grad_user(du), grad_projected(du);
  for (const TrainGroup& group : groups) {
    const auto rows = HistoryRows(cache, group.history);
    ForwardUser(params, rows, user);
    candidates.resize(group.candidates.size());
    scores.resize(group.candidates.size());
    for (std::size_t c = 0; c < group.candidates.size(); ++c) {
      ForwardItem(params, cache.rows(group.candidates[c]), candidates[c]);
      scores[c] = Dot(user.user.data(), candidates[c].projected.data(), du);
    }
    const double m = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - m);
    total += (m + std::log(sum)) - scores[0];
    if (gradient == nullptr) continue;

    std::fill(grad_user.begin(), grad_user.end(), 0.0);
    for (std::size_t c = 0; c < scores.size(); ++c) {
      const double grad_score =
          scale * (std::exp(scores[c] - m) / sum - (c == 0 ? 1.0 : 0.0));
      for (std::size_t u = 0; u < du; ++u) {
        grad_user[u] += grad_score * candidates[c].projected[u];
        grad_projected[u] = grad_score * user.user[u];
      }
      BackwardItem(params, candidates[c], grad_projected, *gradient);
    }
    BackwardUser(params, user, grad_user, *gradient);
  }
  return total * scale;
}

double Loss(const RecModelParams& params, std::span<const TrainGroup> groups,
            const TokenCache& cache) {
  return LossAndGradient(params, groups, cache, nullptr);
}

void TrainConfig::Validate() const {
  CheckShape(shape);
  if (!(learning_rate > 0.0)) {
    throw ValidationError("learning rate must be positive");
  }
  if (negative_ratio < 1) throw ValidationError("negative ratio must be >= 1");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
}

std::vector<TrainGroup> SampleTrainGroups(const Dataset& dataset,
                                          std::size_t negative_ratio,
                                          std::uint64_t seed) {
  std::vector<const std::string*> all_items;
  all_items.reserve(dataset.items().size());
  for (const auto& [id, item] : dataset.items()) all_items.push_back(&id);

  std::vector<TrainGroup> groups;
  for (const ImpressionGroup& g : dataset.GroupsByUser()) {
    const ClickHistory& history = dataset.history(g.user_id);
    if (history.item_ids.empty()) continue;
    std::vector<const std::string*> positives, negatives;
    std::unordered_set<std::string_view> clicked;
    for (const Impression& imp : g.impressions) {
      if (imp.label) {
        positives.push_back(&imp.candidate_item_id);
        clicked.insert(imp.candidate_item_id);
      } else {
        negatives.push_back(&imp.candidate_item_id);
      }
    }
    Rng rng(HashCombine(seed, Fnv1a64(g.user_id)));
    for (const std::string* positive : positives) {
      TrainGroup group{history.item_ids, {*positive}};
      if (negatives.size() >= negative_ratio) {
        // Partial Fisher-Yates: the first negative_ratio slots are a
        // uniform sample without replacement.
        std::vector<const std::string*> pool = negatives;
        for (std::size_t k = 0; k < negative_ratio; ++k) {
          const std::size_t j = k + rng.UniformIndex(pool.size() - k);
          std::swap(pool[k], pool[j]);
          group.candidates.push_back(*pool[k]);
        }
      } else if (!negatives.empty()) {
        for (std::size_t k = 0; k < negative_ratio; ++k) {
          group.candidates.push_back(
              *negatives[rng.UniformIndex(negatives.size())]);
        }
      } else if (all_items.size() > clicked.size()) {
        while (group.candidates.size() < negative_ratio + 1) {
          const std::string* pick = all_items[rng.UniformIndex(all_items.size())];
          if (!clicked.contains(*pick)) group.candidates.push_back(*pick);
        }
      }
      if (group.candidates.size() > 1) groups.push_back(std::move(group));
    }
  }
  return groups;
}

TrainResult Train(const Dataset& dataset, const TrainConfig& config) {
  config.Validate();
  std::size_t positives = 0, skipped = 0;
  for (const Impression& imp : dataset.impressions()) {
    if (!imp.label) continue;
    ++positives;
    if (dataset.history(imp.user_id).item_ids.empty()) ++skipped;
  }
  if (positives == 0) {
    throw TrainingError("training data has no positive impressions");
  }

  const RecModelShape& shape = config.shape;
  TrainResult result;
  result.params =
      RecModelParams::Random(shape, HashCombine(config.seed, 0x1217),
                             config.init_scale);
  result.skipped_positives = skipped;
  RecModelParams& p = result.params;
  const TokenCache cache(dataset.items(), shape.buckets);

  const std::size_t dc = shape.content_dim;
  std::vector<double> m_emb(p.token_embedding.size(), 0.0);
  std::vector<double> v_emb(p.token_embedding.size(), 0.0);
  struct DenseState {
    std::vector<double>* param;
    std::vector<double> m, v;
  };
  DenseState dense[] = {
      {&p.content_attention, std::vector<double>(dc), std::vector<double>(dc)},
      {&p.user_attention, std::vector<double>(shape.user_dim),
       std::vector<double>(shape.user_dim)},
      {&p.projection, std::vector<double>(p.projection.size()),
       std::vector<double>(p.projection.size())}};

  const double b1 = config.beta1, b2 = config.beta2, eps = config.epsilon;
  std::uint64_t step = 0;
  RecModelGradient grad;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto groups = SampleTrainGroups(
        dataset, config.negative_ratio, HashCombine(config.seed, 2 * epoch + 1));
    if (groups.empty()) {
      throw TrainingError("no trainable groups: every user with positives "
                          "lacks a history or negatives");
    }
    Rng order(HashCombine(config.seed, 2 * epoch + 2));
    order.Shuffle(std::span<TrainGroup>(groups));
    result.groups_per_epoch = groups.size();

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < groups.size();
         start += config.batch_size) {
      const std::size_t end = std::min(groups.size(), start + config.batch_size);
      const double loss = LossAndGradient(
          p, std::span<const TrainGroup>(groups.data() + start, end - start),
          cache, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingError("loss is not finite at epoch " +
                            std::to_string(epoch + 1) + ", step " +
                            std::to_string(step + 1) + " (loss " +
                            std::to_string(loss) + ")");
      }
      epoch_loss += loss;
      ++batches;

      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      const double lr = config.learning_rate;
      auto update = [&](double& param, double& m, double& v, double g) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        param -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
      };
      for (auto& [row, g] : grad.token_embedding_rows) {
        const std::size_t base = static_cast<std::size_t>(row) * dc;
        for (std::size_t k = 0; k < dc; ++k) {
          update(p.token_embedding[base + k], m_emb[base + k], v_emb[base + k],
                 g[k]);
        }
      }
      const std::vector<double>* dense_grads[] = {
          &grad.content_attention, &grad.user_attention, &grad.projection};
      for (int b = 0; b < 3; ++b) {
        auto& param = *dense[b].param;
        for (std::size_t i = 0; i < param.size(); ++i) {
          update(param[i], dense[b].m[i], dense[b].v[i], (*dense_grads[b])[i]);
        }
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
    if (!p.AllFinite()) {
      throw TrainingError("parameters became non-finite in epoch " +
                          std::to_string(epoch + 1));
    }
    spdlog::debug("epoch {} loss {:.6f}", epoch + 1, result.epoch_losses.back());
  }
  return result;
}

namespace {

constexpr char kParamsMagic[8] = {'R', 'D', 'C', 'P', 'A', 'R', 'A', 'M'};
constexpr std::uint32_t kParamsVersion = 1;

template <typename T>
T ToLittleEndian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    char* bytes = reinterpret_cast<char*>(&value);
    std::reverse(bytes, bytes + sizeof(T));
  }
  return value;
}

template <typename T>
void WriteLittleEndian(std::ostream& out, T value) {
  value = ToLittleEndian(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadLittleEndian(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated params file");
  return ToLittleEndian(value);
}

}  // namespace

void SaveParams(const RecModelParams& params,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kParamsMagic, sizeof(kParamsMagic));
  WriteLittleEndian<std::uint32_t>(out, kParamsVersion);
  WriteLittleEndian<std::uint64_t>(out, params.shape.buckets);
  WriteLittleEndian<std::uint64_t>(out, params.shape.content_dim);
  WriteLittleEndian<std::uint64_t>(out, params.shape.user_dim);
  for (const auto* block :
       {&params.token_embedding, &params.content_attention,
        &params.user_attention, &params.projection}) {
    for (double v : *block) {
      WriteLittleEndian<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

RecModelParams LoadParams(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[sizeof(kParamsMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0) {
    throw ValidationError(path.string() + " is not a params file");
  }
  const auto version = ReadLittleEndian<std::uint32_t>(in);
  if (version != kParamsVersion) {
    throw ValidationError("unsupported params version " +
                          std::to_string(version));
  }
  RecModelShape shape;
  shape.buckets = ReadLittleEndian<std::uint64_t>(in);
  shape.content_dim = ReadLittleEndian<std::uint64_t>(in);
  shape.user_dim = ReadLittleEndian<std::uint64_t>(in);
  RecModelParams params = RecModelParams::Zeros(shape);
  for (auto* block : {&params.token_embedding, &params.content_attention,
                      &params.user_attention, &params.projection}) {
    for (double& v : *block) {
      v = std::bit_cast<double>(ReadLittleEndian<std::uint64_t>(in));
    }
  }
  return params;
}

}  // namespace recdc
