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

#include "recdc/eval.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "recdc/errors.h"
#include "recdc/random.h"

namespace recdc {
namespace {

void CheckCutoff(std::size_t k) {
  if (k < 1) throw std::invalid_argument("metric cutoff must be >= 1");
}

void CheckRatio(double r, const char* name) {
  if (!(r > 0.0 && r <= 1.0)) {
    throw ValidationError(std::string(name) + " must lie in (0, 1]");
  }
}

std::size_t CeilCount(double ratio, std::size_t n) {
  const double exact = ratio * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(exact - 1e-9)));
}

ItemMap SampleTokens(const ItemMap& items, double token_ratio,
                     std::uint64_t seed) {
  const Tokenizer surface(/*lowercase=*/false);
  ItemMap out;
  for (const auto& [id, item] : items) {
    const auto tokens = surface.Tokenize(item.Content());
    std::string title;
    if (tokens.empty()) {
      title = item.title;
    } else {
      const std::size_t keep = std::max<std::size_t>(
          1, CeilCount(token_ratio, tokens.size()));
      std::vector<std::size_t> idx(tokens.size());
      std::iota(idx.begin(), idx.end(), 0);
      Rng rng(HashCombine(seed, Fnv1a64(id)));
      for (std::size_t k = 0; k < keep; ++k) {
        std::swap(idx[k], idx[k + rng.UniformIndex(idx.size() - k)]);
      }
      idx.resize(keep);
      std::sort(idx.begin(), idx.end());
      for (std::size_t i : idx) {
        if (!title.empty()) title += ' ';
        title += tokens[i];
      }
    }
    out.emplace(id, Item{id, std::move(title), "", ""});
  }
  return out;
}

Dataset KeepUsers(const Dataset& train, const std::vector<std::string>& keep,
                  ItemMap items) {
  HistoryMap users;
  for (const std::string& id : keep) users.emplace(id, train.history(id));
  std::vector<Impression> impressions;
  for (const Impression& imp : train.impressions()) {
    if (users.contains(imp.user_id)) impressions.push_back(imp);
  }
  return Dataset::Create(std::move(items), std::move(users),
                         std::move(impressions));
}

}  // namespace

double NdcgAtK(std::span<const int> ranked_labels, std::size_t k) {
  CheckCutoff(k);
  std::size_t positives = 0;
  for (int l : ranked_labels) positives += l ? 1 : 0;
  if (positives == 0) return 0.0;
  double dcg = 0.0, ideal = 0.0;
  const std::size_t n = std::min(k, ranked_labels.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked_labels[i]) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  for (std::size_t i = 0; i < std::min(k, positives); ++i) {
    ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / ideal;
}

double RecallAtK(std::span<const int> ranked_labels, std::size_t k) {
  CheckCutoff(k);
  std::size_t positives = 0, hits = 0;
  for (std::size_t i = 0; i < ranked_labels.size(); ++i) {
    if (!ranked_labels[i]) continue;
    ++positives;
    if (i < k) ++hits;
  }
  if (positives == 0) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(positives);
}

std::vector<std::string> MetricsReport::MetricNames() const {
  std::vector<std::string> names;
  for (std::size_t k : cutoffs) names.push_back("N@" + std::to_string(k));
  for (std::size_t k : cutoffs) names.push_back("R@" + std::to_string(k));
  return names;
}

std::vector<double> MetricsReport::MetricValues() const {
  std::vector<double> values = ndcg;
  values.insert(values.end(), recall.begin(), recall.end());
  return values;
}

MetricsReport Evaluate(const RecModelParams& params, const Dataset& test,
                       std::span<const std::size_t> cutoffs) {
  if (cutoffs.empty()) throw ValidationError("no metric cutoffs given");
  for (std::size_t k : cutoffs) CheckCutoff(k);
  MetricsReport report;
  report.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  report.ndcg.assign(cutoffs.size(), 0.0);
  report.recall.assign(cutoffs.size(), 0.0);

  const TokenCache cache(test.items(), params.shape.buckets);
  std::vector<std::string> candidates;
  std::vector<std::size_t> order;
  std::vector<int> labels;
  for (const ImpressionGroup& group : test.GroupsByUser()) {
    const ClickHistory& history = test.history(group.user_id);
    const bool has_positive =
        std::any_of(group.impressions.begin(), group.impressions.end(),
                    [](const Impression& i) { return i.label == 1; });
    if (!has_positive || history.item_ids.empty()) {
      ++report.skipped_groups;
      continue;
    }
    candidates.clear();
    for (const Impression& imp : group.impressions) {
      candidates.push_back(imp.candidate_item_id);
    }
    const std::vector<double> scores =
        ScoreCandidates(params, history, candidates, test.items(), &cache);
    order.resize(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      if (candidates[a] != candidates[b]) return candidates[a] < candidates[b];
      return a < b;
    });
    labels.clear();
    for (std::size_t i : order) labels.push_back(group.impressions[i].label);
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      report.ndcg[c] += NdcgAtK(labels, cutoffs[c]);
      report.recall[c] += RecallAtK(labels, cutoffs[c]);
    }
    ++report.groups;
  }
  if (report.groups == 0) {
    throw ValidationError("no test group has both a history and a positive");
  }
  for (std::size_t c = 0; c < cutoffs.size(); ++c) {
    report.ndcg[c] /= static_cast<double>(report.groups);
    report.recall[c] /= static_cast<double>(report.groups);
  }
  return report;
}

double Quality(std::span<const double> condensed,
               std::span<const double> original) {
  if (condensed.size() != original.size() || original.empty()) {
    throw ValidationError("quality needs the same metrics on both sides");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original[i] == 0.0) {
      throw ValidationError("quality is undefined when an original metric "
                            "is 0");
    }
    sum += condensed[i] / original[i];
  }
  return 100.0 * sum / static_cast<double>(original.size());
}

double Quality(const MetricsReport& condensed, const MetricsReport& original) {
  if (condensed.cutoffs != original.cutoffs) {
    throw ValidationError("quality needs reports with the same cutoffs");
  }
  return Quality(condensed.MetricValues(), original.MetricValues());
}

Dataset BaselineRandom(const Dataset& train, double user_ratio,
                       double token_ratio, std::uint64_t seed) {
  CheckRatio(user_ratio, "user ratio");
  CheckRatio(token_ratio, "token ratio");
  if (train.users().empty()) throw ValidationError("no users to sample");
  std::vector<std::string> ids;
  for (const auto& [id, h] : train.users()) ids.push_back(id);
  const std::size_t keep = CeilCount(user_ratio, ids.size());
  Rng rng(HashCombine(seed, 0x7a4d));
  for (std::size_t k = 0; k < keep; ++k) {
    std::swap(ids[k], ids[k + rng.UniformIndex(ids.size() - k)]);
  }
  ids.resize(keep);
  return KeepUsers(train, ids, SampleTokens(train.items(), token_ratio, seed));
}

Dataset BaselineMajority(const Dataset& train, double user_ratio,
                         double token_ratio, std::uint64_t seed) {
  CheckRatio(user_ratio, "user ratio");
  CheckRatio(token_ratio, "token ratio");
  if (train.users().empty()) throw ValidationError("no users to sample");
  std::vector<const ClickHistory*> users;
  for (const auto& [id, h] : train.users()) users.push_back(&h);
  std::stable_sort(users.begin(), users.end(),
                   [](const ClickHistory* a, const ClickHistory* b) {
                     return a->item_ids.size() > b->item_ids.size();
                   });
  const std::size_t keep = CeilCount(user_ratio, users.size());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < keep; ++i) ids.push_back(users[i]->user_id);
  return KeepUsers(train, ids, SampleTokens(train.items(), token_ratio, seed));
}

Dataset MakeBaseline(BaselineKind kind, const Dataset& train,
                     double user_ratio, double token_ratio,
                     std::uint64_t seed) {
  return kind == BaselineKind::kRandom
             ? BaselineRandom(train, user_ratio, token_ratio, seed)
             : BaselineMajority(train, user_ratio, token_ratio, seed);
}

BaselineRatios MatchBaselineRatios(BaselineKind kind, const Dataset& train,
                                   const Dataset& condensed,
                                   std::uint64_t seed) {
  if (train.users().empty()) throw ValidationError("no users to sample");
  const SizeReport target = ComputeSizeReport(condensed, train);
  BaselineRatios best;
  best.user_ratio =
      std::clamp(static_cast<double>(condensed.users().size()) /
                     static_cast<double>(train.users().size()),
                 1e-9, 1.0);
  auto overall = [&](double token_ratio) {
    return ComputeSizeReport(
               MakeBaseline(kind, train, best.user_ratio, token_ratio, seed),
               train)
        .overall_ratio;
  };
  double lo = 1e-3, hi = 1.0;
  best.token_ratio = hi;
  best.overall_ratio = overall(hi);
  double best_gap = std::abs(best.overall_ratio - target.overall_ratio);
  for (int it = 0; it < 30 && best.overall_ratio > target.overall_ratio; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = overall(mid);
    const double gap = std::abs(r - target.overall_ratio);
    if (gap < best_gap) {
      best_gap = gap;
      best.token_ratio = mid;
      best.overall_ratio = r;
    }
    (r > target.overall_ratio ? hi : lo) = mid;
    if (hi - lo < 1e-4) break;
  }
  return best;
}

double AdjustedRandIndex(std::span<const std::size_t> a,
                         std::span<const std::size_t> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("labelings differ in length");
  }
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<std::size_t, std::size_t>, double> table;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, count] : table) index += pairs(count);
  for (const auto& [key, count] : rows) sum_rows += pairs(count);
  for (const auto& [key, count] : cols) sum_cols += pairs(count);
  const double expected = sum_rows * sum_cols / pairs(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::string FormatNumber(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

std::string Table::ToTsv() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += '\t';
      out += cells[i];
    }
    out += '\n';
  };
  line(columns);
  for (const auto& row : rows) line(row);
  return out;
}

std::string Table::ToJson() const {
  nlohmann::ordered_json array = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json object = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < columns.size() && i < row.size(); ++i) {
      const std::string& cell = row[i];
      char* end = nullptr;
      const double number = std::strtod(cell.c_str(), &end);
      if (!cell.empty() && end == cell.c_str() + cell.size() &&
          std::isfinite(number)) {
        object[columns[i]] = number;
      } else {
        object[columns[i]] = cell;
      }
    }
    array.push_back(std::move(object));
  }
  return array.dump(2) + "\n";
}

Table Table::ParseTsv(std::string_view text) {
  Table table;
  std::size_t start = 0, number = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t s = 0;
    while (true) {
      const std::size_t t = line.find('\t', s);
      cells.emplace_back(line.substr(s, t == std::string_view::npos
                                            ? std::string_view::npos
                                            : t - s));
      if (t == std::string_view::npos) break;
      s = t + 1;
    }
    if (table.columns.empty()) {
      table.columns = std::move(cells);
    } else {
      if (cells.size() != table.columns.size()) {
        throw ParseError("table", number, "row width differs from header");
      }
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

Table MetricsTable(const MetricsReport& report) {
  Table table;
  table.columns = report.MetricNames();
  table.columns.push_back("groups");
  table.columns.push_back("skipped");
  std::vector<std::string> row;
  for (double v : report.MetricValues()) row.push_back(FormatNumber(v, 17));
  row.push_back(std::to_string(report.groups));
  row.push_back(std::to_string(report.skipped_groups));
  table.rows.push_back(std::move(row));
  return table;
}

MetricsReport MetricsFromTable(const Table& table) {
  if (table.rows.size() != 1) {
    throw ValidationError("metrics table must have exactly one row");
  }
  MetricsReport report;
  const auto& row = table.rows[0];
  std::map<std::size_t, double> ndcg, recall;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    const std::string& name = table.columns[i];
    if (name == "groups") {
      report.groups = std::stoul(row[i]);
    } else if (name == "skipped") {
      report.skipped_groups = std::stoul(row[i]);
    } else if (name.size() > 2 && (name[0] == 'N' || name[0] == 'R') &&
               name[1] == '@') {
      const std::size_t k = std::stoul(name.substr(2));
      (name[0] == 'N' ? ndcg : recall)[k] = std::stod(row[i]);
    } else {
      throw ValidationError("unknown metrics column " + name);
    }
  }
  for (const auto& [k, v] : ndcg) {
    if (!recall.contains(k)) {
      throw ValidationError("metrics table lacks R@" + std::to_string(k));
    }
    report.cutoffs.push_back(k);
    report.ndcg.push_back(v);
    report.recall.push_back(recall[k]);
  }
  return report;
}

namespace {

SweepRow RunCondensed(const Dataset& train, const Dataset& test,
                      const ExperimentSetup& setup,
                      const CondenseConfig& condense,
                      const RecModelParams& reference_params,
                      const MetricsReport& original, LlmBackend& backend) {
  CondensationResult condensed =
      Condense(train, condense, setup.prompts, backend, reference_params);
  const TrainResult model = Train(condensed.dataset, setup.train);
  SweepRow row;
  row.metrics = Evaluate(model.params, test, setup.cutoffs);
  row.quality = Quality(row.metrics, original);
  row.users = condensed.dataset.users().size();
  row.overall_ratio = ComputeSizeReport(condensed.dataset, train).overall_ratio;
  return row;
}

}  // namespace

SweepResult SweepAlpha(const Dataset& train, const Dataset& test,
                       std::span<const double> alphas,
                       const ExperimentSetup& setup, LlmBackend& backend) {
  SweepResult sweep;
  const TrainResult reference = Train(train, setup.train);
  sweep.original = Evaluate(reference.params, test, setup.cutoffs);
  for (double alpha : alphas) {
    CondenseConfig condense = setup.condense;
    condense.alpha = alpha;
    SweepRow row = RunCondensed(train, test, setup, condense, reference.params,
                                sweep.original, backend);
    row.value = alpha;
    spdlog::info("alpha {}: quality {:.2f}%", alpha, row.quality);
    sweep.rows.push_back(std::move(row));
  }
  return sweep;
}

SweepResult SweepK(const Dataset& train, const Dataset& test,
                   std::span<const std::size_t> ks,
                   const ExperimentSetup& setup, LlmBackend& backend) {
  SweepResult sweep;
  const TrainResult reference = Train(train, setup.train);
  sweep.original = Evaluate(reference.params, test, setup.cutoffs);
  for (std::size_t k : ks) {
    CondenseConfig condense = setup.condense;
    condense.k = k;
    SweepRow row = RunCondensed(train, test, setup, condense, reference.params,
                                sweep.original, backend);
    row.value = static_cast<double>(k);
    spdlog::info("K {}: quality {:.2f}%", k, row.quality);
    sweep.rows.push_back(std::move(row));
  }
  return sweep;
}

Table SweepTable(const SweepResult& sweep, std::string_view value_column) {
  Table table;
  table.columns = {std::string(value_column), "quality", "users",
                   "overall_ratio"};
  for (const std::string& name : sweep.original.MetricNames()) {
    table.columns.push_back(name);
  }
  for (const SweepRow& row : sweep.rows) {
    // Shortest form that reads back as the same double.
    char value[64];
    const auto written = std::to_chars(value, value + sizeof(value), row.value);
    std::vector<std::string> cells = {std::string(value, written.ptr), FormatNumber(row.quality, 2),
                                      std::to_string(row.users),
                                      FormatNumber(row.overall_ratio, 4)};
    for (double v : row.metrics.MetricValues()) {
      cells.push_back(FormatNumber(v, 4));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

}  // namespace recdc
