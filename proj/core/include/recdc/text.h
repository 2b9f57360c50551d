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

#ifndef RECDC_TEXT_H_
#define RECDC_TEXT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recdc {

// Splits text into maximal runs of ASCII letters, digits and non-ASCII
// bytes (so UTF-8 words stay whole). Everything else is a separator and is
// discarded. ASCII letters are lowercased unless disabled.
class Tokenizer {
 public:
  explicit Tokenizer(bool lowercase = true) : lowercase_(lowercase) {}

  std::vector<std::string> Tokenize(std::string_view text) const;
  std::size_t CountTokens(std::string_view text) const;

  bool lowercase() const { return lowercase_; }

 private:
  bool lowercase_;
};

// Seed folded into every feature hash. Changing it changes every embedding
// and every trained model, so it is fixed for the life of the format.
inline constexpr std::uint64_t kFeatureHashSeed = 0x5eedc0de2b1dULL;

struct HashedFeature {
  std::size_t bucket;
  double sign;  // +1 or -1
};

// Maps a token to a bucket in [0, buckets) and a sign. The bucket comes
// from the low bits of the mixed hash, the sign from the top bit.
HashedFeature HashToken(std::string_view token, std::size_t buckets);

// Fixed-dimension real vector produced by the text encoder, pooling or the
// recommender's encoders.
struct Embedding {
  std::vector<double> values;
  bool normalized = false;

  Embedding() = default;
  explicit Embedding(std::vector<double> v, bool is_normalized = false)
      : values(std::move(v)), normalized(is_normalized) {}
  static Embedding Zeros(std::size_t dim) {
    return Embedding(std::vector<double>(dim, 0.0));
  }

  std::size_t dim() const { return values.size(); }
  bool IsZero() const;
  double Norm() const;
  bool AllFinite() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;
};

// Returns v / ||v||, or the zero vector unchanged.
Embedding Normalize(Embedding v);

// Element-wise arithmetic mean followed by L2 normalization. Throws
// std::invalid_argument on an empty input or mixed dimensions.
Embedding Pool(std::span<const Embedding> vectors);

// Euclidean distance. Throws std::invalid_argument on dimension mismatch.
double Distance(const Embedding& a, const Embedding& b);
double Distance(std::span<const double> a, std::span<const double> b);

// dot(a, b) / (|a| |b|); 0 when either side is the zero vector.
double CosineSimilarity(const Embedding& a, const Embedding& b);

inline constexpr std::size_t kDefaultTextDim = 256;

// Deterministic hashed bag-of-tokens encoder. Each distinct token
// contributes sign * (1 + ln tf) to its bucket; the result is
// L2-normalized. Empty text maps to the zero vector.
class TextEncoder {
 public:
  explicit TextEncoder(std::size_t dim = kDefaultTextDim,
                       Tokenizer tokenizer = Tokenizer());

  Embedding Encode(std::string_view text) const;

  std::size_t dim() const { return dim_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }

 private:
  std::size_t dim_;
  Tokenizer tokenizer_;
};

}  // namespace recdc

#endif  // RECDC_TEXT_H_
