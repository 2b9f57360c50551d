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


#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "recdc/condenser.h"
#include "recdc/dataset.h"
#include "recdc/eval.h"
#include "recdc/random.h"
#include "recdc/rec_model.h"
#include "recdc/synthetic.h"
#include "recdc/text.h"

namespace recdc {
namespace {

const SyntheticBenchmark& Bench() {
  static const SyntheticBenchmark* bench =
      new SyntheticBenchmark(GenerateSynthetic(SyntheticBenchmarkSpec{}));
  return *bench;
}

void BM_EncodeText(benchmark::State& state) {
  const TextEncoder encoder;
  std::vector<std::string> texts;
  for (const auto& [id, item] : Bench().dataset.items()) {
    texts.push_back(item.Content());
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(encoder.Encode(texts[i++ % texts.size()]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EncodeText);

void BM_KMeans(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<std::vector<double>> points(n, std::vector<double>(64));
  for (auto& p : points) {
    for (double& x : p) x = rng.Uniform(-1.0, 1.0);
  }
  KMeansConfig config;
  config.restarts = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(KMeans(points, 8, config));
  }
}
BENCHMARK(BM_KMeans)->Arg(400)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const Dataset& data = Bench().dataset;
  const RecModelShape shape;
  const RecModelParams params = RecModelParams::Random(shape, 0);
  const TokenCache cache(data.items(), shape.buckets);
  std::vector<TrainGroup> groups = SampleTrainGroups(data, 4, 0);
  groups.resize(32);
  for (auto _ : state) {
    RecModelGradient grad;
    benchmark::DoNotOptimize(LossAndGradient(params, groups, cache, &grad));
  }
  state.SetItemsProcessed(state.iterations() * groups.size());
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMicrosecond);

void BM_Evaluate(benchmark::State& state) {
  const Dataset test =
      SplitDataset(Bench().dataset, SplitRatios(), 0)[2];
  const RecModelParams params = RecModelParams::Random(RecModelShape{}, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Evaluate(params, test, kNewsCutoffs));
  }
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace recdc

BENCHMARK_MAIN();
