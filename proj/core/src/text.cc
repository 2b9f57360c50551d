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
#include <map>
#include <stdexcept>

#include "recdc/random.h"

namespace recdc {
namespace {

bool IsTokenByte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

void CheckSameDim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw std::invalid_argument("embedding dimension mismatch: " +
                                std::to_string(a) + " vs " +
                                std::to_string(b));
  }
}

}  // namespace

std::vector<std::string> Tokenizer::Tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !IsTokenByte(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && IsTokenByte(text[j])) ++j;
    if (j > i) {
      std::string token(text.substr(i, j - i));
      if (lowercase_) {
        for (char& c : token) {
          if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
      }
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return tokens;
}

std::size_t Tokenizer::CountTokens(std::string_view text) const {
  std::size_t count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    const bool t = IsTokenByte(c);
    if (t && !in_token) ++count;
    in_token = t;
  }
  return count;
}

HashedFeature HashToken(std::string_view token, std::size_t buckets) {
  const std::uint64_t h = Mix64(Fnv1a64(token) ^ kFeatureHashSeed);
  return {static_cast<std::size_t>(h % buckets), (h >> 63) ? -1.0 : 1.0};
}

bool Embedding::IsZero() const {
  for (double v : values) {
    if (v != 0.0) return false;
  }
  return true;
}

double Embedding::Norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

bool Embedding::AllFinite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Embedding Normalize(Embedding v) {
  const double norm = v.Norm();
  if (norm == 0.0) {
    v.normalized = false;
    return v;
  }
  for (double& x : v.values) x /= norm;
  v.normalized = true;
  return v;
}

Embedding Pool(std::span<const Embedding> vectors) {
  if (vectors.empty()) {
    throw std::invalid_argument("cannot pool an empty set of embeddings");
  }
  const std::size_t dim = vectors.front().dim();
  std::vector<double> sum(dim, 0.0);
  for (const Embedding& v : vectors) {
    CheckSameDim(dim, v.dim());
    for (std::size_t i = 0; i < dim; ++i) sum[i] += v.values[i];
  }
  const double n = static_cast<double>(vectors.size());
  for (double& x : sum) x /= n;
  return Normalize(Embedding(std::move(sum)));
}

double Distance(std::span<const double> a, std::span<const double> b) {
  CheckSameDim(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double Distance(const Embedding& a, const Embedding& b) {
  return Distance(std::span<const double>(a.values),
                  std::span<const double>(b.values));
}

double CosineSimilarity(const Embedding& a, const Embedding& b) {
  CheckSameDim(a.dim(), b.dim());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

TextEncoder::TextEncoder(std::size_t dim, Tokenizer tokenizer)
    : dim_(dim), tokenizer_(tokenizer) {
  if (dim_ == 0) throw std::invalid_argument("text encoder dimension is 0");
}

Embedding TextEncoder::Encode(std::string_view text) const {
  // Term counts in first-occurrence order keep the accumulation order fixed.
  std::vector<std::string> order;
  std::map<std::string, int, std::less<>> tf;
  for (std::string& token : tokenizer_.Tokenize(text)) {
    auto [it, inserted] = tf.try_emplace(token, 0);
    ++it->second;
    if (inserted) order.push_back(std::move(token));
  }
  std::vector<double> values(dim_, 0.0);
  for (const std::string& token : order) {
    const HashedFeature f = HashToken(token, dim_);
    values[f.bucket] += f.sign * (1.0 + std::log(tf.find(token)->second));
  }
  return Normalize(Embedding(std::move(values)));
}

}  // namespace recdc
