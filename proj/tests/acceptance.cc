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


// Acceptance run: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "oracles.h"
#include "recdc/condenser.h"
#include "recdc/dataset.h"
#include "recdc/errors.h"
#include "recdc/eval.h"
#include "recdc/evopro.h"
#include "recdc/file_io.h"
#include "recdc/llm.h"
#include "recdc/random.h"
#include "recdc/rec_model.h"
#include "recdc/synthetic.h"
#include "recdc/text.h"
#include "test_util.h"

namespace recdc {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

std::string Fmt(const char* format, double a, double b = 0, double c = 0,
                double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double Gauss(Rng& rng) {
  const double u = 1.0 - rng.UniformDouble();
  const double v = rng.UniformDouble();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

// 1. Ranking metrics against brute-force definitions.
Outcome MetricOracles() {
  const Stopwatch clock;
  std::size_t cases = 0;
  double worst = 0.0;
  for (std::size_t len = 0; len <= 8; ++len) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << len); ++mask) {
      std::vector<int> labels(len);
      for (std::size_t i = 0; i < len; ++i) labels[i] = (mask >> i) & 1;
      for (std::size_t k = 1; k <= 8; ++k) {
        worst = std::max(worst, std::abs(NdcgAtK(labels, k) -
                                         oracle::Ndcg(labels, k)));
        worst = std::max(worst, std::abs(RecallAtK(labels, k) -
                                         oracle::Recall(labels, k)));
        ++cases;
      }
    }
  }
  const double seconds = clock.Seconds();
  return {worst <= 1e-12 && seconds < 5.0,
          std::to_string(cases) + " sequence/cutoff pairs, max error " +
              Fmt("%.3g, %.3f s", worst, seconds)};
}

// 2. Published Quality and density arithmetic.
Outcome PublishedArithmetic() {
  const std::vector<double> condensed = {0.3071, 0.3691, 0.4377, 0.6150};
  const std::vector<double> original = {0.3176, 0.3783, 0.4534, 0.6270};
  const double quality = Quality(condensed, original);
  const double density = Density(347727, 94057, 65238) * 100.0;
  const bool pass =
      std::abs(quality - 97.22) <= 0.01 && std::abs(density - 0.0057) <= 1e-4;
  return {pass, Fmt("Quality %.4f%%, MIND density %.6f%%", quality, density)};
}

// 3. Analytic gradients against central differences.
double BlockError(const std::vector<double>& analytic,
                  const std::vector<double>& numeric) {
  double diff = 0, a = 0, n = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    a += analytic[i] * analytic[i];
    n += numeric[i] * numeric[i];
  }
  const double scale = std::max(std::sqrt(a), std::sqrt(n));
  return scale == 0 ? 0 : std::sqrt(diff) / scale;
}

Outcome GradientCheck() {
  const Stopwatch clock;
  ItemMap items;
  for (const Item& item :
       {testing::MakeItem("a", "football cup final", "the team wins"),
        testing::MakeItem("b", "tennis open", "a long match on clay"),
        testing::MakeItem("c", "stock market rally", "shares climb"),
        testing::MakeItem("d", "bank rates", "the central bank holds"),
        testing::MakeItem("e", "beach resorts", "")}) {
    items.emplace(item.id, item);
  }
  const RecModelShape shape{32, 8, 4};
  const TokenCache cache(items, shape.buckets);
  const std::vector<TrainGroup> groups = {
      {{"a", "b"}, {"c", "d", "e", "a", "b"}},
      {{"e"}, {"a", "b", "c", "d", "e"}},
      {{"c", "d", "e"}, {"b", "a", "c", "d", "e"}}};
  RecModelParams params = RecModelParams::Random(shape, 11, 0.5);
  RecModelGradient grad;
  LossAndGradient(params, groups, cache, &grad);

  constexpr double kStep = 1e-6;
  const auto numeric = [&](std::vector<double>& block) {
    std::vector<double> out;
    for (double& v : block) {
      const double saved = v;
      v = saved + kStep;
      const double up = Loss(params, groups, cache);
      v = saved - kStep;
      const double down = Loss(params, groups, cache);
      v = saved;
      out.push_back((up - down) / (2 * kStep));
    }
    return out;
  };
  std::vector<double> token_analytic(params.token_embedding.size(), 0.0);
  for (const auto& [row, values] : grad.token_embedding_rows) {
    std::copy(values.begin(), values.end(),
              token_analytic.begin() + row * shape.content_dim);
  }
  const double worst = std::max(
      {BlockError(token_analytic, numeric(params.token_embedding)),
       BlockError(grad.content_attention, numeric(params.content_attention)),
       BlockError(grad.user_attention, numeric(params.user_attention)),
       BlockError(grad.projection, numeric(params.projection))});
  const double seconds = clock.Seconds();
  return {worst < 1e-4 && seconds < 10.0,
          Fmt("max block relative error %.3g, %.3f s", worst, seconds)};
}

// 4. With alpha = 0 the selection score is the embedding distance.
Outcome AlphaZeroDegenerate() {
  Rng rng(4);
  EmbeddingMap users, interests;
  for (std::size_t i = 0; i < 1000; ++i) {
    std::vector<double> u(16), v(32);
    for (double& x : u) x = Gauss(rng);
    for (double& x : v) x = rng.UniformDouble();
    const std::string id = "u" + std::to_string(i);
    users.emplace(id, Embedding(std::move(u)));
    interests.emplace(id, Embedding(std::move(v)));
  }
  ClusterModel model = ClusterUsers(users, 8, KMeansConfig{});
  model.interest_centroids = InterestCentroids(model, interests);
  const auto scores = SelectionScores(model, users, interests, 0.0);
  std::size_t equal = 0;
  for (const auto& [id, s] : scores) {
    equal += s.d_u == s.d_emb && s.d_int > 0.0;
  }
  return {equal == 1000 && scores.size() == 1000,
          std::to_string(equal) + " of 1000 users with d_u == d_emb bitwise"};
}

// 5. K-means invariants.
Outcome KMeansInvariants() {
  Rng rng(9);
  const Stopwatch clock;
  std::vector<std::vector<double>> points(2000, std::vector<double>(64));
  for (auto& p : points) {
    for (double& x : p) x = Gauss(rng);
  }
  KMeansConfig config;
  config.seed = 3;
  const KMeansResult big = KMeans(points, 16, config);
  const double seconds = clock.Seconds();
  bool monotone = true;
  const auto check_history = [&](const KMeansResult& r) {
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      monotone &= r.inertia_history[i] <= r.inertia_history[i - 1];
    }
  };
  check_history(big);

  std::size_t exact = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<std::vector<double>> blobs;
    std::vector<std::size_t> truth;
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t i = 0; i < 50; ++i) {
        blobs.push_back({b * 20.0 + Gauss(rng), -(b * 20.0) + Gauss(rng),
                         Gauss(rng)});
        truth.push_back(b);
      }
    }
    config.seed = seed;
    const KMeansResult r = KMeans(blobs, 2, config);
    check_history(r);
    exact += AdjustedRandIndex(r.assignments, truth) == 1.0;
  }

  std::vector<std::vector<double>> small(points.begin(), points.begin() + 40);
  const KMeansResult full = KMeans(small, small.size(), config);
  check_history(full);
  const bool pass =
      monotone && exact == 10 && full.inertia == 0.0 && seconds < 10.0;
  return {pass, std::string(monotone ? "inertia non-increasing" :
                                       "inertia increased") +
                    ", two-blob exact recovery " + std::to_string(exact) +
                    "/10" + Fmt(", K=n inertia %g, n=2000 d=64 K=16 in %.3f s",
                                full.inertia, seconds)};
}

// 6. The condense command is byte-for-byte reproducible.
int RunCli(std::vector<std::string> args) {
  args.insert(args.begin(), "recdc");
  std::ostringstream out, err;
  const int code = cli::Run(args, out, err);
  if (code != cli::kExitOk) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

Outcome CondenseDeterminism(const fs::path& root) {
  if (RunCli({"-q", "gen-synthetic", "-o", (root / "data").string()}) != 0) {
    return {false, "gen-synthetic failed"};
  }
  const std::vector<std::string> files = {
      "condensed/items.tsv", "condensed/behaviors.tsv",
      "condensed/provenance.tsv", "condensed/size_report.tsv",
      "condensed/manifest.txt"};
  std::vector<std::string> first;
  for (int run = 0; run < 2; ++run) {
    if (RunCli({"-q", "condense", "--items",
                (root / "data" / "items.tsv").string(), "--behaviors",
                (root / "data" / "behaviors.tsv").string(), "--output_dir",
                (root / "out").string()}) != 0) {
      return {false, "condense failed"};
    }
    for (std::size_t f = 0; f < files.size(); ++f) {
      const std::string bytes = ReadFile(root / "out" / files[f]);
      if (run == 0) {
        first.push_back(bytes);
      } else if (bytes != first[f]) {
        return {false, files[f] + " differs between runs"};
      }
    }
  }
  return {true, std::to_string(files.size()) +
                    " condensed artifacts byte-identical across two runs"};
}

// 7. Synthetic end-to-end benchmark.
Outcome SyntheticBenchmarkRun() {
  const Stopwatch clock;
  std::vector<double> aris, tfdcon, random, majority;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticBenchmarkSpec spec;
    spec.seed = seed;
    const SyntheticBenchmark bench = GenerateSynthetic(spec);
    const auto parts = SplitDataset(bench.dataset, SplitRatios(), seed);
    const Dataset& train = parts[0];
    const Dataset& test = parts[2];

    TrainConfig train_config;
    train_config.seed = seed;
    const TrainResult reference = Train(train, train_config);
    const MetricsReport original =
        Evaluate(reference.params, test, kNewsCutoffs);

    CondenseConfig condense;
    condense.k = 8;
    condense.m = 5;
    condense.alpha = 0.2;
    condense.seed = seed;
    condense.kmeans.seed = seed;
    MockBackend mock;
    const CondensationResult result = Condense(
        train, condense, CondensePrompts{}, mock, reference.params);

    std::vector<std::size_t> clusters, groups;
    for (const std::string& id : result.model.user_ids) {
      clusters.push_back(result.model.assignments.at(id));
      groups.push_back(bench.user_groups.at(id));
    }
    aris.push_back(AdjustedRandIndex(clusters, groups));

    const auto quality_of = [&](const Dataset& data) {
      const TrainResult trained = Train(data, train_config);
      return Quality(Evaluate(trained.params, test, kNewsCutoffs), original);
    };
    tfdcon.push_back(quality_of(result.dataset));
    for (BaselineKind kind : {BaselineKind::kRandom, BaselineKind::kMajority}) {
      const BaselineRatios ratios =
          MatchBaselineRatios(kind, train, result.dataset, seed);
      const Dataset baseline = MakeBaseline(kind, train, ratios.user_ratio,
                                            ratios.token_ratio, seed);
      (kind == BaselineKind::kRandom ? random : majority)
          .push_back(quality_of(baseline));
    }
    std::fprintf(stderr,
                 "  seed %llu: ARI %.4f, Quality TF-DCon %.2f, Random %.2f, "
                 "Majority %.2f (%.1f s)\n",
                 static_cast<unsigned long long>(seed), aris.back(),
                 tfdcon.back(), random.back(), majority.back(),
                 clock.Seconds());
  }
  const double seconds = clock.Seconds();
  const double min_ari = *std::min_element(aris.begin(), aris.end());
  const double q = Median(tfdcon), qr = Median(random), qm = Median(majority);
  const bool pass =
      min_ari >= 0.9 && q >= 90.0 && q > qr && q > qm && seconds < 300.0;
  return {pass, Fmt("min ARI %.4f, median Quality TF-DCon %.2f vs Random "
                    "%.2f and Majority %.2f",
                    min_ari, q, qr, qm) +
                    Fmt(", %.1f s", seconds)};
}

// 8. Prompt evolution invariants.
Outcome EvoProInvariants() {
  const Dataset data = GenerateSynthetic(SyntheticBenchmarkSpec{}).dataset;
  std::vector<Item> contents;
  for (const auto& [id, item] : data.items()) contents.push_back(item);

  const TextEncoder encoder;
  MockBackendConfig echo_config;
  echo_config.echo = true;
  MockBackend echo(echo_config);
  const double identity =
      CalScore(DefaultCondensePrompt(), contents, echo, encoder);
  const double n = static_cast<double>(contents.size());

  EvoConfig config;
  config.generations = 3;
  config.children = 4;
  config.score_sample = 40;
  MockBackend mock;
  const EvoResult result =
      Evolve(DefaultCondensePrompt(), contents, config, mock, encoder);
  const std::vector<TraceRow> rows = ParseTrace(SerializeTrace(result.trace));
  std::map<std::size_t, std::vector<TraceRow>> by_generation;
  for (const TraceRow& row : rows) by_generation[row.generation].push_back(row);
  bool argmax = !result.error && result.winners.size() == 3 &&
                by_generation.size() == 3;
  for (const auto& [g, gen] : by_generation) {
    // Highest score, lowest candidate index on ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < gen.size(); ++i) {
      if (gen[i].score > gen[best].score) best = i;
    }
    for (std::size_t i = 0; i < gen.size(); ++i) {
      argmax &= gen[i].selected == (i == best);
    }
  }
  const bool pass = argmax && std::abs(identity - n) <= 1e-6;
  return {pass, std::string(argmax ? "trace winners are the argmax"
                                   : "trace winner mismatch") +
                    Fmt(" over %g rows; identity CalScore %.9f for %g items",
                        static_cast<double>(rows.size()), identity, n)};
}

// 9. K = users, m = 1, echo backend reproduces the histories.
Outcome DegenerateIdentity() {
  SyntheticBenchmarkSpec spec;
  const Dataset train =
      SplitDataset(GenerateSynthetic(spec).dataset, SplitRatios(), 0)[0];
  const RecModelParams params =
      RecModelParams::Random(RecModelShape{}, 1, 0.1);
  CondenseConfig config;
  config.k = train.users().size();
  config.m = 1;
  MockBackendConfig echo_config;
  echo_config.echo = true;
  MockBackend echo(echo_config);
  const CondensationResult result =
      Condense(train, config, CondensePrompts{}, echo, params);
  std::multiset<std::vector<std::string>> original, condensed;
  for (const auto& [id, h] : train.users()) original.insert(h.item_ids);
  for (const auto& [id, h] : result.dataset.users()) {
    condensed.insert(h.item_ids);
  }
  bool titles = true;
  for (const auto& [id, item] : result.dataset.items()) {
    titles &= item.title == train.item(id).Content();
  }
  return {original == condensed && titles,
          std::to_string(condensed.size()) + " synthetic users for " +
              std::to_string(original.size()) + " real users; histories " +
              (original == condensed ? "match" : "differ") + ", titles " +
              (titles ? "echo full content" : "differ")};
}

// 10. Fuzzed round-trip and referential integrity.
Outcome FuzzedDatamodel(const fs::path& root) {
  Rng rng(10);
  std::size_t round_trips = 0, rejected = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Dataset ds = testing::FuzzDataset(rng);
    const fs::path items = root / "items.tsv";
    const fs::path behaviors = root / "behaviors.tsv";
    SaveDataset(ds, items, behaviors);
    const Dataset back = LoadDataset(items, behaviors);
    round_trips += back == ds && SerializeItems(back) == SerializeItems(ds) &&
                   SerializeBehaviors(back) == SerializeBehaviors(ds);
    const std::string ghost = "ghost-" + std::to_string(trial);
    try {
      ParseDataset(SerializeItems(ds), SerializeBehaviors(ds) + "uGhost\t\t" +
                                           ghost + "-1\n");
    } catch (const DanglingReferenceError& e) {
      rejected += e.id() == ghost;
    }
  }
  return {round_trips == 1000 && rejected == 1000,
          std::to_string(round_trips) + "/1000 round trips, " +
              std::to_string(rejected) + "/1000 dangling ids rejected"};
}

}  // namespace
}  // namespace recdc

namespace fs = std::filesystem;

int main() {
  using recdc::Outcome;
  const recdc::testing::TempDir dir("acceptance");
  fs::create_directories(dir / "fuzz");
  const std::vector<std::function<Outcome()>> criteria = {
      recdc::MetricOracles,
      recdc::PublishedArithmetic,
      recdc::GradientCheck,
      recdc::AlphaZeroDegenerate,
      recdc::KMeansInvariants,
      [&] { return recdc::CondenseDeterminism(dir.path()); },
      recdc::SyntheticBenchmarkRun,
      recdc::EvoProInvariants,
      recdc::DegenerateIdentity,
      [&] { return recdc::FuzzedDatamodel(dir / "fuzz"); },
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i]();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("criterion %zu: %s - %s\n", i + 1,
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
