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

#ifndef TRIZX_RETRIEVAL_HPP_
#define TRIZX_RETRIEVAL_HPP_

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "trizx/embedding.hpp"
#include "trizx/error.hpp"
#include "trizx/knowledge_base.hpp"

namespace trizx {

// Covers the whole canonical base; the hashed embedder ranks short names
// (e.g. "Speed") below long multi-word names in two-parameter sentences.
inline constexpr std::size_t kDefaultTopK = 40;

struct RetrievalCandidate {
  std::size_t entry_id = 0;
  double similarity = 0.0;

  bool operator==(const RetrievalCandidate&) const = default;
};

// Entry vectors aligned with entry_id. Immutable once built.
class VectorIndex {
 public:
  VectorIndex() = default;
  VectorIndex(std::size_t dim, std::vector<EmbeddingVector> vectors,
              std::string kb_hash = {}, std::string embedder_id = {})
      : dim_(dim),
        vectors_(std::move(vectors)),
        kb_hash_(std::move(kb_hash)),
        embedder_id_(std::move(embedder_id)) {
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
      if (vectors_[i].dim() != dim_) {
        throw ContractViolation("VectorIndex: vector " + std::to_string(i) +
                                " has dimension " +
                                std::to_string(vectors_[i].dim()));
      }
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  const EmbeddingVector& vector(std::size_t entry_id) const { return vectors_.at(entry_id); }
  const std::vector<EmbeddingVector>& vectors() const { return vectors_; }
  const std::string& kb_hash() const { return kb_hash_; }
  const std::string& embedder_id() const { return embedder_id_; }

  bool operator==(const VectorIndex&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<EmbeddingVector> vectors_;
  std::string kb_hash_;
  std::string embedder_id_;
};

inline VectorIndex build_index(const KnowledgeBase& kb, const Embedder& embedder) {
  std::vector<EmbeddingVector> vecs;
  vecs.reserve(kb.entry_count());
  for (const auto& e : kb.entries()) {
    try {
      vecs.push_back(embedder.embed(e.document));
    } catch (const std::exception& ex) {
      throw BackendError("build_index: embedding entry " +
                         std::to_string(e.entry_id) + " failed: " + ex.what());
    }
    if (vecs.back().dim() != embedder.dim()) {
      throw BackendError("build_index: entry " + std::to_string(e.entry_id) +
                         " embedded with wrong dimension");
    }
  }
  return VectorIndex(embedder.dim(), std::move(vecs), kb.content_hash(),
                     embedder.id());
}

namespace detail {

// Higher similarity first, then lower entry id.
inline bool ranks_before(const RetrievalCandidate& a, const RetrievalCandidate& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.entry_id < b.entry_id;
}

inline void check_query(const VectorIndex& index, const EmbeddingVector& query) {
  if (query.dim() != index.dim()) {
    throw ContractViolation("query dimension " + std::to_string(query.dim()) +
                            " does not match index dimension " +
                            std::to_string(index.dim()));
  }
}

}  // namespace detail

// The min(k, M) most similar entries, best first.
inline std::vector<RetrievalCandidate> top_k(const VectorIndex& index,
                                             const EmbeddingVector& query,
                                             std::size_t k) {
  detail::check_query(index, query);
  if (k == 0 || index.size() == 0) return {};
  std::vector<RetrievalCandidate> all(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    all[i] = {i, cosine_similarity(query, index.vector(i))};
  }
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n),
                    all.end(), detail::ranks_before);
  all.resize(n);
  return all;
}

// Reference for top_k: score everything, sort everything, cut.
inline std::vector<RetrievalCandidate> brute_force_top_k(
    const VectorIndex& index, const EmbeddingVector& query, std::size_t k) {
  detail::check_query(index, query);
  std::vector<RetrievalCandidate> all;
  for (std::size_t i = 0; i < index.size(); ++i) {
    all.push_back({i, cosine_similarity(query, index.vector(i))});
  }
  std::sort(all.begin(), all.end(), detail::ranks_before);
  if (all.size() > k) all.resize(k);
  return all;
}

// JSON sidecar: dimension, count, row-major data and the source KB hash.
inline nlohmann::json index_to_json(const VectorIndex& index) {
  std::vector<double> flat;
  flat.reserve(index.size() * index.dim());
  for (const auto& v : index.vectors()) {
    flat.insert(flat.end(), v.values.begin(), v.values.end());
  }
  return {{"format", "trizx-index/1"},
          {"dim", index.dim()},
          {"count", index.size()},
          {"kb_hash", index.kb_hash()},
          {"embedder", index.embedder_id()},
          {"data", flat}};
}

inline VectorIndex index_from_json(const nlohmann::json& j) {
  try {
    const auto dim = j.at("dim").get<std::size_t>();
    const auto count = j.at("count").get<std::size_t>();
    const auto flat = j.at("data").get<std::vector<double>>();
    if (flat.size() != dim * count) {
      throw DataError("index data holds " + std::to_string(flat.size()) +
                      " values, expected " + std::to_string(dim * count));
    }
    std::vector<EmbeddingVector> vecs;
    vecs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      auto first = flat.begin() + static_cast<std::ptrdiff_t>(i * dim);
      vecs.emplace_back(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(dim)));
    }
    return VectorIndex(dim, std::move(vecs), j.at("kb_hash").get<std::string>(),
                       j.value("embedder", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed index file: ") + e.what());
  }
}

inline void save_index(const VectorIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << index_to_json(index).dump() << '\n';
}

// Loads a sidecar and rejects it unless it was built from `kb` with an
// embedder of the same configuration.
inline VectorIndex load_index(const std::string& path, const KnowledgeBase& kb,
                              const Embedder& embedder) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed index file: " + path);
  auto index = index_from_json(j);
  if (index.kb_hash() != kb.content_hash()) {
    throw IntegrityError("index " + path + " was built from a different knowledge base");
  }
  if (index.dim() != embedder.dim() || index.embedder_id() != embedder.id()) {
    throw IntegrityError("index " + path + " was built with embedder '" +
                         index.embedder_id() + "'");
  }
  if (index.size() != kb.entry_count()) {
    throw IntegrityError("index entry count does not match knowledge base");
  }
  return index;
}

}  // namespace trizx

#endif  // TRIZX_RETRIEVAL_HPP_
