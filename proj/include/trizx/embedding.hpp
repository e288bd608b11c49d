// Copyright 2026 The trizx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRIZX_EMBEDDING_HPP_
#define TRIZX_EMBEDDING_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trizx/error.hpp"
#include "trizx/text.hpp"

namespace trizx {

inline constexpr std::size_t kDefaultEmbeddingDim = 256;
inline constexpr std::size_t kMinEmbeddingDim = 8;

// Dense vector in the shared sentence/entry space. Embedders hand out
// unit-norm vectors (or the zero vector); raw vectors are allowed for
// arithmetic.
struct EmbeddingVector {
  std::vector<double> values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(std::size_t dim) : values(dim, 0.0) {}
  explicit EmbeddingVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  std::span<const double> view() const { return values; }

  bool is_zero() const {
    for (double v : values) {
      if (v != 0.0) return false;
    }
    return true;
  }

  bool operator==(const EmbeddingVector&) const = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Scales to unit L2 norm in place; the zero vector is left alone.
inline void l2_normalize(EmbeddingVector& v) {
  const double n = l2_norm(v.view());
  if (n == 0.0) return;
  for (double& x : v.values) x /= n;
}

// dot(a,b) / (|a| |b|), and 0 when either side is the zero vector.
inline double cosine_similarity(const EmbeddingVector& a,
                                const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw ContractViolation("cosine_similarity: dimension mismatch (" +
                            std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()) + ")");
  }
  const double na = l2_norm(a.view());
  const double nb = l2_norm(b.view());
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot(a.view(), b.view()) / (na * nb);
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

// Anything mapping text into the space. Implementations must return the
// same vector for the same text for the lifetime of their configuration.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::size_t dim() const = 0;
  // Identifies the configuration; stored alongside persisted indexes.
  virtual std::string id() const = 0;
};

// Bucket of a token in a hashed bag-of-words space of size dim.
inline std::size_t token_bucket(std::string_view token, std::size_t dim) {
  return static_cast<std::size_t>(fnv1a64(token) % dim);
}

// Hashed bag-of-words: FNV-1a bucket counts, L2-normalized.
inline EmbeddingVector embed_text(std::string_view text,
                                  std::size_t dim = kDefaultEmbeddingDim) {
  if (dim < kMinEmbeddingDim) {
    throw ContractViolation("embed_text: dim must be >= 8");
  }
  EmbeddingVector v(dim);
  for (const auto& tok : tokenize(text)) v.values[token_bucket(tok, dim)] += 1.0;
  l2_normalize(v);
  return v;
}

class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = kDefaultEmbeddingDim) : dim_(dim) {
    if (dim_ < kMinEmbeddingDim) {
      throw ContractViolation("HashingEmbedder: dim must be >= 8");
    }
  }

  EmbeddingVector embed(std::string_view text) const override {
    return embed_text(text, dim_);
  }
  std::size_t dim() const override { return dim_; }
  std::string id() const override { return "hash-fnv1a64/" + std::to_string(dim_); }

 private:
  std::size_t dim_;
};

}  // namespace trizx

#endif  // TRIZX_EMBEDDING_HPP_
