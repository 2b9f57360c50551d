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
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "recdc/errors.h"
#include "recdc/synthetic.h"
#include "test_util.h"

namespace recdc {
namespace {

using testing::MakeItem;

ItemMap SampleItems() {
  ItemMap items;
  items.emplace("a", MakeItem("a", "Storm hits coast", "Heavy rain and wind.",
                              "weather"));
  items.emplace("b", MakeItem("b", "Team wins final", "A late goal decided it.",
                              "sports"));
  items.emplace("c", MakeItem("c", "Markets slide", "Stocks fell sharply.",
                              "finance"));
  items.emplace("d", MakeItem("d", "New phone launch", "", "tech"));
  items.emplace("e", MakeItem("e", "Recipe: lentil soup",
                              "Soup soup soup with lentils and cumin.", ""));
  items.emplace("empty", MakeItem("empty", ""));
  return items;
}

// SampleItems minus the untitled item, which a Dataset rejects.
ItemMap DatasetItems() {
  ItemMap items = SampleItems();
  items.erase("empty");
  return items;
}

RecModelShape SmallShape() { return {64, 8, 4}; }

void ExpectNear(const std::vector<double>& got, const std::vector<double>& want,
                double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
  }
}

TEST(EncodeItemTest, ZeroParamsGiveZeroVector) {
  const auto params = RecModelParams::Zeros(SmallShape());
  const auto items = SampleItems();
  EXPECT_TRUE(EncodeItem(params, items.at("a")).IsZero());
  EXPECT_EQ(EncodeItem(params, items.at("a")).dim(), 8u);
  EXPECT_DOUBLE_EQ(
      Score(params, ClickHistory{"u", {"a", "b"}}, items.at("c"), items), 0.0);
}

TEST(EncodeItemTest, EmptyContentGivesZeroVector) {
  const auto params = RecModelParams::Random(SmallShape(), 3);
  const Embedding e = EncodeItem(params, MakeItem("x", ""));
  EXPECT_EQ(e.dim(), 8u);
  EXPECT_TRUE(e.IsZero());
}

TEST(EncodeItemTest, ZeroAttentionIsOrderInvariant) {
  auto params = RecModelParams::Random(SmallShape(), 5);
  std::fill(params.content_attention.begin(), params.content_attention.end(),
            0.0);
  const Embedding forward = EncodeItem(params, MakeItem("x", "red green blue"));
  const Embedding reversed =
      EncodeItem(params, MakeItem("x", "blue green red"));
  ExpectNear(forward.values, reversed.values, 1e-15);
  params = RecModelParams::Random(SmallShape(), 5, 1.0);
  EXPECT_NE(EncodeItem(params, MakeItem("x", "red red green")).values,
            EncodeItem(params, MakeItem("x", "red green green")).values);
}

TEST(EncodeItemTest, MatchesOracle) {
  const auto items = SampleItems();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto params = RecModelParams::Random({128, 16, 6}, seed, 0.8);
    for (const auto& [id, item] : items) {
      ExpectNear(EncodeItem(params, item).values,
                 oracle::ItemVector(params, item), 1e-9);
    }
  }
}

TEST(UserEmbeddingTest, MatchesOracle) {
  const auto items = SampleItems();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto params = RecModelParams::Random({128, 16, 6}, seed, 0.8);
    for (const std::vector<std::string>& history :
         std::vector<std::vector<std::string>>{
             {"a"}, {"a", "b", "c"}, {"e", "d", "empty", "b"}}) {
      ExpectNear(UserEmbedding(params, ClickHistory{"u", history}, items).values,
                 oracle::UserVector(params, history, items), 1e-9);
    }
  }
}

TEST(UserEmbeddingTest, SingleItemIsItsProjection) {
  const auto items = SampleItems();
  const auto params = RecModelParams::Random(SmallShape(), 11, 0.5);
  ExpectNear(UserEmbedding(params, ClickHistory{"u", {"c"}}, items).values,
             oracle::ProjectedItem(params, items.at("c")), 1e-12);
}

TEST(UserEmbeddingTest, DuplicateHistoryEqualsSingle) {
  HistoryMap users;
  users.emplace("u", ClickHistory{"u", {"a", "a"}});
  const Dataset ds = Dataset::Create(DatasetItems(), users, {});
  const ClickHistory& deduped = ds.history("u");
  ASSERT_EQ(deduped.item_ids, (std::vector<std::string>{"a"}));
  const auto params = RecModelParams::Random(SmallShape(), 2);
  EXPECT_EQ(UserEmbedding(params, deduped, ds.items()),
            UserEmbedding(params, ClickHistory{"u", {"a"}}, ds.items()));
}

TEST(UserEmbeddingTest, Errors) {
  const auto items = SampleItems();
  const auto params = RecModelParams::Random(SmallShape(), 2);
  EXPECT_THROW(UserEmbedding(params, ClickHistory{"u", {}}, items),
               std::invalid_argument);
  EXPECT_THROW(UserEmbedding(params, ClickHistory{"u", {"zzz"}}, items),
               DanglingReferenceError);
}

TEST(ScoreTest, MatchesOracleAndBatchScoring) {
  const auto items = SampleItems();
  const std::vector<std::string> history = {"a", "e"};
  const std::vector<std::string> candidates = {"b", "c", "d", "empty"};
  const TokenCache cache(items, 128);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto params = RecModelParams::Random({128, 16, 6}, seed, 0.8);
    const ClickHistory h{"u", history};
    const auto plain = ScoreCandidates(params, h, candidates, items);
    const auto cached = ScoreCandidates(params, h, candidates, items, &cache);
    ASSERT_EQ(plain.size(), candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double want =
          oracle::ScorePair(params, history, items.at(candidates[i]), items);
      EXPECT_NEAR(Score(params, h, items.at(candidates[i]), items), want, 1e-9);
      EXPECT_NEAR(plain[i], want, 1e-9);
      EXPECT_EQ(plain[i], cached[i]);
    }
  }
}

TEST(ScoreTest, BilinearInUserSide) {
  const auto items = SampleItems();
  const ClickHistory h{"u", {"a", "b"}};
  auto params = RecModelParams::Random(SmallShape(), 4, 0.5);
  const double s = Score(params, h, items.at("c"), items);
  const Embedding z = UserEmbedding(params, h, items);
  const std::vector<double> c = oracle::ProjectedItem(params, items.at("c"));
  EXPECT_NEAR(oracle::Dot(z.values, c), s, 1e-12);
  for (double lambda : {-2.0, 0.5, 3.0}) {
    std::vector<double> scaled = z.values;
    for (double& x : scaled) x *= lambda;
    EXPECT_NEAR(oracle::Dot(scaled, c), lambda * s, 1e-12);
  }
  // With uniform history attention, scaling the projection by l scales both
  // the user vector and the candidate vector, so the score by l^2.
  std::fill(params.user_attention.begin(), params.user_attention.end(), 0.0);
  const double base = Score(params, h, items.at("c"), items);
  for (double& x : params.projection) x *= 3.0;
  EXPECT_NEAR(Score(params, h, items.at("c"), items), 9.0 * base, 1e-12);
}

TEST(ScoreTest, PositiveScalingKeepsRanking) {
  const auto items = SampleItems();
  const std::vector<std::string> candidates = {"a", "b", "c", "d", "e"};
  const auto params = RecModelParams::Random(SmallShape(), 9, 0.7);
  auto scores =
      ScoreCandidates(params, ClickHistory{"u", {"e"}}, candidates, items);
  auto rank = [](const std::vector<double>& s) {
    std::vector<std::size_t> order(s.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });
    return order;
  };
  const auto base = rank(scores);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    std::vector<double> scaled = scores;
    for (double& x : scaled) x *= c;
    EXPECT_EQ(rank(scaled), base);
  }
}

// Per-block relative error between analytic and central-difference
// gradients: |g - fd| / max(|g|, |fd|).
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

std::vector<double> NumericGradient(RecModelParams& params,
                                    std::vector<double>& block,
                                    std::span<const TrainGroup> groups,
                                    const TokenCache& cache,
                                    std::size_t begin, std::size_t end) {
  constexpr double kStep = 1e-6;
  std::vector<double> out;
  for (std::size_t i = begin; i < end; ++i) {
    const double saved = block[i];
    block[i] = saved + kStep;
    const double up = Loss(params, groups, cache);
    block[i] = saved - kStep;
    const double down = Loss(params, groups, cache);
    block[i] = saved;
    out.push_back((up - down) / (2 * kStep));
  }
  return out;
}

TEST(GradientTest, MatchesCentralDifferences) {
  const ItemMap items = SampleItems();
  const RecModelShape shape{32, 8, 4};
  const TokenCache cache(items, shape.buckets);
  const std::vector<TrainGroup> groups = {
      {{"a", "b"}, {"c", "d", "e", "a", "b"}},
      {{"e"}, {"a", "b", "c", "d", "e"}},
      {{"c", "d", "e"}, {"b", "a", "c", "d", "e"}}};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    RecModelParams params = RecModelParams::Random(shape, seed, 0.5);
    RecModelGradient grad;
    const double loss = LossAndGradient(params, groups, cache, &grad);
    EXPECT_NEAR(loss, oracle::GroupLoss(params, groups, items), 1e-10);
    EXPECT_NEAR(Loss(params, groups, cache), loss, 1e-12);

    const auto check = [&](const char* name, std::vector<double>& block,
                           const std::vector<double>& analytic) {
      const auto numeric =
          NumericGradient(params, block, groups, cache, 0, block.size());
      const double err = BlockError(analytic, numeric);
      EXPECT_LT(err, 1e-4) << name << " seed " << seed;
    };
    check("content_attention", params.content_attention,
          grad.content_attention);
    check("user_attention", params.user_attention, grad.user_attention);
    check("projection", params.projection, grad.projection);

    std::vector<double> analytic_rows, numeric_rows;
    const std::size_t dc = shape.content_dim;
    for (std::uint32_t row = 0; row < shape.buckets; ++row) {
      auto numeric = NumericGradient(params, params.token_embedding, groups,
                                     cache, row * dc, (row + 1) * dc);
      auto it = grad.token_embedding_rows.find(row);
      std::vector<double> analytic =
          it == grad.token_embedding_rows.end() ? std::vector<double>(dc, 0.0)
                                                : it->second;
      if (it == grad.token_embedding_rows.end()) {
        for (double v : numeric) EXPECT_NEAR(v, 0.0, 1e-8) << "row " << row;
      }
      analytic_rows.insert(analytic_rows.end(), analytic.begin(),
                           analytic.end());
      numeric_rows.insert(numeric_rows.end(), numeric.begin(), numeric.end());
    }
    EXPECT_LT(BlockError(analytic_rows, numeric_rows), 1e-4)
        << "token_embedding seed " << seed;
  }
}

Dataset SeparableDataset() {
  SyntheticBenchmarkSpec spec;
  spec.groups = 2;
  spec.users_per_group = 10;
  spec.items_per_topic = 40;
  spec.history_min = 5;
  spec.history_max = 10;
  spec.impressions_per_user = 20;
  spec.positives_per_user = 4;
  spec.noise_rate = 0.0;
  spec.seed = 4;
  return GenerateSynthetic(spec).dataset;
}

TrainConfig SmallTrainConfig() {
  TrainConfig config;
  config.shape = {1024, 32, 16};
  config.epochs = 6;
  config.batch_size = 8;
  config.learning_rate = 1e-2;
  config.seed = 1;
  return config;
}

TEST(TrainTest, LossDecreasesOnSeparableData) {
  const Dataset ds = SeparableDataset();
  ASSERT_EQ(ds.users().size(), 20u);
  const TrainResult result = Train(ds, SmallTrainConfig());
  ASSERT_EQ(result.epoch_losses.size(), 6u);
  EXPECT_LT(result.epoch_losses.back(), result.epoch_losses.front());
  EXPECT_TRUE(result.params.AllFinite());
  EXPECT_EQ(result.groups_per_epoch, 80u);
  EXPECT_EQ(result.skipped_positives, 0u);
}

TEST(TrainTest, FixedSeedIsBitIdentical) {
  const Dataset ds = SeparableDataset();
  const TrainResult a = Train(ds, SmallTrainConfig());
  const TrainResult b = Train(ds, SmallTrainConfig());
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  TrainConfig other = SmallTrainConfig();
  other.seed = 2;
  EXPECT_NE(Train(ds, other).params, a.params);
}

TEST(TrainTest, NoPositivesIsTrainingError) {
  HistoryMap users;
  users.emplace("u", ClickHistory{"u", {"a"}});
  const Dataset ds = Dataset::Create(
      DatasetItems(), users, {{"u", "b", 0}, {"u", "c", 0}});
  EXPECT_THROW(Train(ds, SmallTrainConfig()), TrainingError);
}

TEST(TrainTest, PositivesWithoutHistoryAreSkipped) {
  HistoryMap users;
  users.emplace("u", ClickHistory{"u", {}});
  const Dataset ds = Dataset::Create(DatasetItems(), users, {{"u", "b", 1}});
  EXPECT_THROW(Train(ds, SmallTrainConfig()), TrainingError);
}

TEST(TrainConfigTest, RejectsBadValues) {
  TrainConfig config;
  EXPECT_NO_THROW(config.Validate());
  config.learning_rate = 0;
  EXPECT_THROW(config.Validate(), ValidationError);
  config = TrainConfig{};
  config.negative_ratio = 0;
  EXPECT_THROW(config.Validate(), ValidationError);
  config = TrainConfig{};
  config.shape.content_dim = 0;
  EXPECT_THROW(Train(SeparableDataset(), config), ValidationError);
}

TEST(SampleTrainGroupsTest, PositiveFirstThenUserNegatives) {
  const Dataset ds = SeparableDataset();
  const auto groups = SampleTrainGroups(ds, 4, 3);
  ASSERT_EQ(groups.size(), 80u);
  for (const TrainGroup& g : groups) {
    ASSERT_EQ(g.candidates.size(), 5u);
    EXPECT_FALSE(g.history.empty());
    std::vector<std::string> negatives(g.candidates.begin() + 1,
                                       g.candidates.end());
    std::sort(negatives.begin(), negatives.end());
    EXPECT_EQ(std::adjacent_find(negatives.begin(), negatives.end()),
              negatives.end());
  }
  EXPECT_EQ(SampleTrainGroups(ds, 4, 3).size(), groups.size());
  const auto again = SampleTrainGroups(ds, 4, 3);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    EXPECT_EQ(again[i].candidates, groups[i].candidates);
  }
}

TEST(SampleTrainGroupsTest, FallsBackToUnclickedItems) {
  HistoryMap users;
  users.emplace("u", ClickHistory{"u", {"a"}});
  const Dataset ds = Dataset::Create(DatasetItems(), users, {{"u", "b", 1}});
  const auto groups = SampleTrainGroups(ds, 3, 0);
  ASSERT_EQ(groups.size(), 1u);
  ASSERT_EQ(groups[0].candidates.size(), 4u);
  EXPECT_EQ(groups[0].candidates[0], "b");
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NE(groups[0].candidates[i], "b");
}

TEST(ParamsFileTest, SaveLoadRoundTrip) {
  testing::TempDir dir("rec_model_test");
  const auto params = RecModelParams::Random({100, 12, 5}, 8);
  SaveParams(params, dir / "m.params");
  EXPECT_EQ(LoadParams(dir / "m.params"), params);
  const auto size = std::filesystem::file_size(dir / "m.params");
  EXPECT_EQ(size, 8 + 4 + 3 * 8 + 8 * (100 * 12 + 12 + 5 + 12 * 5));
}

TEST(ParamsFileTest, RejectsBadFiles) {
  testing::TempDir dir("rec_model_test");
  EXPECT_THROW(LoadParams(dir / "missing.params"), IoError);
  {
    std::ofstream(dir / "junk.params") << "not a params file at all";
  }
  EXPECT_THROW(LoadParams(dir / "junk.params"), ValidationError);
  SaveParams(RecModelParams::Random({16, 4, 2}, 1), dir / "t.params");
  std::filesystem::resize_file(dir / "t.params", 60);
  EXPECT_THROW(LoadParams(dir / "t.params"), IoError);
}

TEST(RecModelParamsTest, RandomIsSeededAndFinite) {
  const auto a = RecModelParams::Random(SmallShape(), 1);
  EXPECT_EQ(a, RecModelParams::Random(SmallShape(), 1));
  EXPECT_NE(a, RecModelParams::Random(SmallShape(), 2));
  EXPECT_TRUE(a.AllFinite());
  EXPECT_EQ(a.token_embedding.size(), 64u * 8u);
  EXPECT_EQ(a.projection.size(), 8u * 4u);
  auto b = a;
  b.user_attention[0] = std::nan("");
  EXPECT_FALSE(b.AllFinite());
}

}  // namespace
}  // namespace recdc
