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

#ifndef RECDC_EVAL_H_
#define RECDC_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recdc/condenser.h"
#include "recdc/dataset.h"
#include "recdc/llm.h"
#include "recdc/rec_model.h"

namespace recdc {

// Labels are in model-score order. Both return 0 when there is no
// positive. k must be >= 1.
double NdcgAtK(std::span<const int> ranked_labels, std::size_t k);
double RecallAtK(std::span<const int> ranked_labels, std::size_t k);

// Cutoffs used for news-style data and for the smaller catalogs.
inline const std::vector<std::size_t> kNewsCutoffs = {5, 10};
inline const std::vector<std::size_t> kSmallCatalogCutoffs = {1, 5};

struct MetricsReport {
  std::vector<std::size_t> cutoffs;
  std::vector<double> ndcg;    // one per cutoff
  std::vector<double> recall;  // one per cutoff
  std::size_t groups = 0;          // groups averaged
  std::size_t skipped_groups = 0;  // no positive, or no history

  // N@k for every cutoff, then R@k for every cutoff.
  std::vector<std::string> MetricNames() const;
  std::vector<double> MetricValues() const;
};

// Ranks each user's test candidates by Score (ties by candidate id),
// computes per-group metrics and averages them. Throws ValidationError
// when no group is eligible.
MetricsReport Evaluate(const RecModelParams& params, const Dataset& test,
                       std::span<const std::size_t> cutoffs);

// Mean of condensed/original over paired metrics, in percent. Throws
// ValidationError when an original metric is 0 or the lists differ.
double Quality(std::span<const double> condensed,
               std::span<const double> original);
double Quality(const MetricsReport& condensed, const MetricsReport& original);

// Keeps ceil(user_ratio * n_users) users drawn uniformly, and replaces each
// item's content with ceil(token_ratio * tokens) of its tokens drawn
// uniformly (order kept) as the new title.
Dataset BaselineRandom(const Dataset& train, double user_ratio,
                       double token_ratio, std::uint64_t seed);

// As BaselineRandom, but keeps the users with the longest histories (ties
// by user id).
Dataset BaselineMajority(const Dataset& train, double user_ratio,
                         double token_ratio, std::uint64_t seed);

enum class BaselineKind { kRandom, kMajority };

Dataset MakeBaseline(BaselineKind kind, const Dataset& train,
                     double user_ratio, double token_ratio,
                     std::uint64_t seed);

struct BaselineRatios {
  double user_ratio = 1.0;
  double token_ratio = 1.0;
  double overall_ratio = 1.0;  // achieved
};

// Keeps as many users as `condensed` has, then bisects the token ratio
// until the baseline's overall serialized size ratio against `train` is as
// close as possible to that of `condensed`.
BaselineRatios MatchBaselineRatios(BaselineKind kind, const Dataset& train,
                                   const Dataset& condensed,
                                   std::uint64_t seed);

// Adjusted Rand index between two labelings of the same points.
double AdjustedRandIndex(std::span<const std::size_t> a,
                         std::span<const std::size_t> b);

// Small tabular report: tab-separated with a header, or a JSON array of
// row objects (cells that parse as numbers are emitted as numbers).
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string ToTsv() const;
  std::string ToJson() const;
  static Table ParseTsv(std::string_view text);
};

std::string FormatNumber(double value, int digits = 6);

Table MetricsTable(const MetricsReport& report);
MetricsReport MetricsFromTable(const Table& table);

struct ExperimentSetup {
  TrainConfig train;
  CondenseConfig condense;
  CondensePrompts prompts;
  std::vector<std::size_t> cutoffs = kNewsCutoffs;
};

struct SweepRow {
  double value = 0.0;  // alpha or K
  double quality = 0.0;
  std::size_t users = 0;
  double overall_ratio = 0.0;
  MetricsReport metrics;
};

struct SweepResult {
  MetricsReport original;
  std::vector<SweepRow> rows;
};

// Trains the reference model on `train` once, then for every value runs
// condensation, retrains on the condensed data and reports Quality on
// `test`. All runs share setup.train.seed.
SweepResult SweepAlpha(const Dataset& train, const Dataset& test,
                       std::span<const double> alphas,
                       const ExperimentSetup& setup, LlmBackend& backend);
SweepResult SweepK(const Dataset& train, const Dataset& test,
                   std::span<const std::size_t> ks,
                   const ExperimentSetup& setup, LlmBackend& backend);

Table SweepTable(const SweepResult& sweep, std::string_view value_column);

}  // namespace recdc

#endif  // RECDC_EVAL_H_
