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

#include "trizx/retrieval.hpp"

#include <gtest/gtest.h>

#include <chrono>

#include "test_support.hpp"
#include "trizx/random.hpp"

namespace trizx {
namespace {

using testing::fixture_kb;

EmbeddingVector random_unit(Rng& rng, std::size_t dim) {
  EmbeddingVector v(dim);
  for (auto& x : v.values) x = rng.uniform(-1.0, 1.0);
  l2_normalize(v);
  return v;
}

VectorIndex random_index(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<EmbeddingVector> vecs;
  for (std::size_t i = 0; i < n; ++i) vecs.push_back(random_unit(rng, dim));
  return VectorIndex(dim, std::move(vecs));
}

TEST(BuildIndex, FixtureHasOneVectorPerEntry) {
  const HashingEmbedder emb;
  const auto index = build_index(fixture_kb(), emb);
  EXPECT_EQ(index.size(), 39u);
  EXPECT_EQ(index.dim(), 256u);
  EXPECT_EQ(index.kb_hash(), fixture_kb().content_hash());
  EXPECT_EQ(build_index(fixture_kb(), emb), index);
}

TEST(BuildIndex, EmptyKb) {
  const HashingEmbedder emb;
  EXPECT_EQ(build_index(KnowledgeBase{}, emb).size(), 0u);
}

class FailingEmbedder final : public Embedder {
 public:
  EmbeddingVector embed(std::string_view text) const override {
    if (text.rfind("Speed", 0) == 0) throw std::runtime_error("boom");
    return embed_text(text, 16);
  }
  std::size_t dim() const override { return 16; }
  std::string id() const override { return "failing"; }
};

TEST(BuildIndex, EmbedderFailureNamesEntry) {
  try {
    build_index(fixture_kb(), FailingEmbedder{});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("entry 8"), std::string::npos) << e.what();
  }
}

TEST(TopK, SelfRetrieval) {
  const HashingEmbedder emb;
  const auto index = build_index(fixture_kb(), emb);
  const auto hits = top_k(index, index.vector(7), 5);
  ASSERT_EQ(hits.size(), 5u);
  EXPECT_EQ(hits[0].entry_id, 7u);
  EXPECT_NEAR(hits[0].similarity, 1.0, 1e-12);
}

TEST(TopK, KAtLeastMReturnsAllSorted) {
  Rng rng(5);
  const auto index = random_index(rng, 12, 8);
  const auto hits = top_k(index, random_unit(rng, 8), 100);
  ASSERT_EQ(hits.size(), 12u);
  for (std::size_t i = 1; i < hits.size(); ++i) {
    EXPECT_GE(hits[i - 1].similarity, hits[i].similarity);
  }
}

TEST(TopK, ZeroKAndMismatch) {
  Rng rng(5);
  const auto index = random_index(rng, 4, 8);
  EXPECT_TRUE(top_k(index, random_unit(rng, 8), 0).empty());
  EXPECT_THROW(top_k(index, random_unit(rng, 9), 3), ContractViolation);
  EXPECT_THROW(brute_force_top_k(index, random_unit(rng, 9), 3), ContractViolation);
}

TEST(TopK, ZeroQueryOrdersByEntryId) {
  Rng rng(9);
  const auto index = random_index(rng, 6, 8);
  const auto hits = brute_force_top_k(index, EmbeddingVector(8), 6);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    EXPECT_EQ(hits[i].entry_id, i);
    EXPECT_EQ(hits[i].similarity, 0.0);
  }
  EXPECT_EQ(top_k(index, EmbeddingVector(8), 6), hits);
}

TEST(TopK, SingleEntry) {
  Rng rng(1);
  const auto index = random_index(rng, 1, 8);
  EXPECT_EQ(top_k(index, random_unit(rng, 8), 5).size(), 1u);
  EXPECT_EQ(brute_force_top_k(index, random_unit(rng, 8), 1).size(), 1u);
}

TEST(TopK, TiesBreakOnEntryId) {
  std::vector<EmbeddingVector> vecs(5, EmbeddingVector({1.0, 0.0}));
  const VectorIndex index(2, vecs);
  const auto hits = top_k(index, EmbeddingVector({1.0, 0.0}), 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].entry_id, 0u);
  EXPECT_EQ(hits[2].entry_id, 2u);
}

TEST(TopK, MatchesBruteForceOnRandomIndexes) {
  Rng rng(77);
  const auto index = random_index(rng, 1000, 32);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = random_unit(rng, 32);
    ASSERT_EQ(top_k(index, q, 10), brute_force_top_k(index, q, 10));
  }
}

TEST(IndexSidecar, RoundTripsAndChecksKb) {
  testing::TempDir dir("index");
  const HashingEmbedder emb;
  const auto index = build_index(fixture_kb(), emb);
  save_index(index, dir.str("index.json"));
  EXPECT_EQ(load_index(dir.str("index.json"), fixture_kb(), emb), index);

  auto params = fixture_kb().parameters();
  params[3].name += " x";
  const auto other = KnowledgeBase::from_parameters(params);
  EXPECT_THROW(load_index(dir.str("index.json"), other, emb), IntegrityError);
  EXPECT_THROW(load_index(dir.str("index.json"), fixture_kb(), HashingEmbedder(128)),
               IntegrityError);
  EXPECT_THROW(load_index(dir.str("missing.json"), fixture_kb(), emb), DataError);
  testing::write_file(dir.file("bad.json"),
                      R"({"dim": 2, "count": 2, "data": [1], "kb_hash": ""})");
  EXPECT_THROW(load_index(dir.str("bad.json"), fixture_kb(), emb), DataError);
}

}  // namespace
}  // namespace trizx
