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

#include "recdc/text.h"

#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "oracles.h"
#include "recdc/random.h"

namespace recdc {
namespace {

Embedding RandomEmbedding(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.Uniform(-1, 1);
  return Embedding(std::move(v));
}

TEST(TokenizerTest, SplitsOnPunctuationAndLowercases) {
  const Tokenizer tokenizer;
  EXPECT_EQ(tokenizer.Tokenize("Hello, World! x2-y"),
            (std::vector<std::string>{"hello", "world", "x2", "y"}));
  EXPECT_EQ(Tokenizer(false).Tokenize("Hello World"),
            (std::vector<std::string>{"Hello", "World"}));
  EXPECT_TRUE(tokenizer.Tokenize("  ,;  ").empty());
}

TEST(TokenizerTest, KeepsUtf8WordsWhole) {
  EXPECT_EQ(Tokenizer().Tokenize("東京 naïve"),
            (std::vector<std::string>{"東京", "naïve"}));
}

TEST(TokenizerTest, CountMatchesTokenize) {
  const Tokenizer tokenizer;
  for (const char* text : {"", "a", "a b", " a,b;c ", "ünï code!", "x--y"}) {
    EXPECT_EQ(tokenizer.CountTokens(text), tokenizer.Tokenize(text).size())
        << text;
  }
}

TEST(HashTest, FnvMatchesPublishedVectors) {
  EXPECT_EQ(Fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(Fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(HashTest, SplitMixMatchesReferenceSequence) {
  // First outputs of the reference splitmix64 generator seeded with 0.
  EXPECT_EQ(Mix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(Mix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
}

TEST(EncodeTextTest, Deterministic) {
  const TextEncoder encoder;
  for (const char* text : {"", "alpha", "the quick brown fox", "東京 2024"}) {
    EXPECT_EQ(encoder.Encode(text), encoder.Encode(text));
  }
}

TEST(EncodeTextTest, EmptyTextIsZeroVector) {
  const Embedding e = TextEncoder().Encode(" ,. ");
  EXPECT_EQ(e.dim(), kDefaultTextDim);
  EXPECT_TRUE(e.IsZero());
  EXPECT_FALSE(e.normalized);
}

TEST(EncodeTextTest, SelfCosineIsOne) {
  const TextEncoder encoder;
  for (const char* text : {"a", "alpha beta", "repeat repeat repeat once"}) {
    const Embedding e = encoder.Encode(text);
    EXPECT_TRUE(e.normalized);
    EXPECT_NEAR(e.Norm(), 1.0, 1e-12);
    EXPECT_NEAR(CosineSimilarity(e, e), 1.0, 1e-12);
  }
}

TEST(EncodeTextTest, CosineMatchesBruteForceHashedTf) {
  const TextEncoder encoder;
  const double got = CosineSimilarity(encoder.Encode("alpha beta"),
                                      encoder.Encode("gamma delta"));
  const double want = oracle::Cosine(oracle::HashedTf("alpha beta", 256),
                                     oracle::HashedTf("gamma delta", 256));
  EXPECT_NEAR(got, want, 1e-9);
}

TEST(EncodeTextTest, VectorsMatchBruteForceOnVariedText) {
  const char* texts[] = {"Alpha alpha ALPHA beta", "one, two; three... one",
                         "東京 タワー 東京", "x1 x2 x3 x4 x5 x6 x7 x8 x9"};
  for (std::size_t dim : {7u, 64u, 256u}) {
    const TextEncoder encoder(dim);
    for (const char* text : texts) {
      const std::vector<double> want = oracle::HashedTf(text, dim);
      const Embedding got = encoder.Encode(text);
      ASSERT_EQ(got.dim(), dim);
      for (std::size_t i = 0; i < dim; ++i) {
        EXPECT_NEAR(got.values[i], want[i], 1e-12) << text << " @" << i;
      }
    }
  }
}

TEST(EncodeTextTest, SublinearTermWeight) {
  // A single repeated token still normalizes to a unit signed basis vector.
  const TextEncoder encoder(32);
  const Embedding e = encoder.Encode("echo echo echo");
  const HashedFeature f = HashToken("echo", 32);
  EXPECT_DOUBLE_EQ(e.values[f.bucket], f.sign);
}

TEST(PoolTest, SingleAndRepeatedInputNormalize) {
  Rng rng(1);
  const Embedding v = RandomEmbedding(rng, 16);
  const Embedding n = Normalize(v);
  const Embedding one[] = {v};
  const Embedding two[] = {v, v};
  EXPECT_EQ(Pool(one), n);
  const Embedding pooled = Pool(two);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_NEAR(pooled.values[i], n.values[i], 1e-15);
  }
}

TEST(PoolTest, MatchesHandComputedMean) {
  Rng rng(2);
  const std::vector<Embedding> vs = {RandomEmbedding(rng, 9),
                                     RandomEmbedding(rng, 9),
                                     RandomEmbedding(rng, 9)};
  std::vector<double> mean(9, 0.0);
  for (std::size_t i = 0; i < 9; ++i) {
    mean[i] = (vs[0].values[i] + vs[1].values[i] + vs[2].values[i]) / 3.0;
  }
  const double norm = std::sqrt(oracle::Dot(mean, mean));
  const Embedding pooled = Pool(vs);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_NEAR(pooled.values[i], mean[i] / norm, 1e-9);
  }
  EXPECT_NEAR(pooled.Norm(), 1.0, 1e-6);
}

TEST(PoolTest, ZeroMeanStaysZero) {
  const Embedding a(std::vector<double>{1, -2}), b(std::vector<double>{-1, 2});
  const Embedding pooled = Pool(std::vector<Embedding>{a, b});
  EXPECT_TRUE(pooled.IsZero());
  EXPECT_FALSE(pooled.normalized);
}

TEST(PoolTest, RejectsEmptyAndMixedDimensions) {
  EXPECT_THROW(Pool(std::span<const Embedding>()), std::invalid_argument);
  EXPECT_THROW(Pool(std::vector<Embedding>{Embedding::Zeros(2),
                                           Embedding::Zeros(3)}),
               std::invalid_argument);
}

TEST(DistanceTest, BasicCases) {
  Rng rng(3);
  const Embedding v = RandomEmbedding(rng, 12);
  EXPECT_EQ(Distance(v, v), 0.0);
  const Embedding e1(std::vector<double>{1, 0, 0});
  const Embedding e2(std::vector<double>{0, 1, 0});
  EXPECT_NEAR(Distance(e1, e2), std::sqrt(2.0), 1e-9);
  EXPECT_THROW(Distance(e1, Embedding::Zeros(2)), std::invalid_argument);
}

TEST(DistanceTest, MatchesBruteForce) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const Embedding a = RandomEmbedding(rng, 33), b = RandomEmbedding(rng, 33);
    EXPECT_NEAR(Distance(a, b), oracle::Euclid(a.values, b.values), 1e-9);
  }
}

TEST(CosineTest, BasicCases) {
  Rng rng(5);
  const Embedding v = RandomEmbedding(rng, 10);
  Embedding neg = v;
  for (double& x : neg.values) x = -x;
  EXPECT_NEAR(CosineSimilarity(v, v), 1.0, 1e-12);
  EXPECT_NEAR(CosineSimilarity(v, neg), -1.0, 1e-12);
  EXPECT_EQ(CosineSimilarity(v, Embedding::Zeros(10)), 0.0);
  EXPECT_THROW(CosineSimilarity(v, Embedding::Zeros(3)),
               std::invalid_argument);
}

TEST(CosineTest, SymmetricOnRandomPairs) {
  Rng rng(6);
  for (int t = 0; t < 1000; ++t) {
    const Embedding a = RandomEmbedding(rng, 8), b = RandomEmbedding(rng, 8);
    EXPECT_EQ(CosineSimilarity(a, b), CosineSimilarity(b, a));
  }
}

TEST(CosineTest, DistanceRankingAgreesOnNormalizedVectors) {
  Rng rng(7);
  for (int t = 0; t < 1000; ++t) {
    const Embedding a = Normalize(RandomEmbedding(rng, 6));
    const Embedding b = Normalize(RandomEmbedding(rng, 6));
    const Embedding c = Normalize(RandomEmbedding(rng, 6));
    const double db = Distance(a, b), dc = Distance(a, c);
    const double cb = CosineSimilarity(a, b), cc = CosineSimilarity(a, c);
    if (std::abs(db - dc) < 1e-9) continue;
    EXPECT_EQ(db < dc, cb > cc);
  }
}

}  // namespace
}  // namespace recdc
