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

#include "trizx/rerank.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "test_support.hpp"

namespace trizx {
namespace {

using testing::fixture_kb;

const double kSigmoidOne = 1.0 / (1.0 + std::exp(-1.0));

KnowledgeBase tiny_kb() {
  TrizParameter speed{9, "Speed", "How fast something moves.", {}, {}};
  TrizParameter strength{14, "Strength", "Resistance to breaking.", {"toughness"},
                         {"Ribs add strength."}};
  return KnowledgeBase::from_parameters({speed, strength});
}

RerankerParams weights(std::vector<double> w) {
  RerankerParams p;
  p.weights = std::move(w);
  return p;
}

std::size_t entry_of(int parameter_id) {
  for (const auto& e : fixture_kb().entries()) {
    if (e.parameter_id == parameter_id) return e.entry_id;
  }
  return 0;
}

TEST(ScorePair, ZeroWeightsGiveHalf) {
  const auto& kb = fixture_kb();
  for (const auto& e : kb.entries()) {
    EXPECT_DOUBLE_EQ(score_pair(RerankerParams{}, "anything at all", e, kb, 0.3), 0.5);
  }
}

TEST(ScorePair, SentenceEqualToNameHasFullLabelOverlap) {
  const auto kb = tiny_kb();
  const auto& speed = kb.entries()[0];
  const auto f = rerank_features("Speed", speed, kb, 0.0);
  EXPECT_DOUBLE_EQ(f[kLabelOverlap], 1.0);
  EXPECT_NEAR(score_pair(weights({1, 0, 0, 0, 0, 0, 0}), "Speed", speed, kb, 0.0), kSigmoidOne,
              1e-12);
  EXPECT_NEAR(kSigmoidOne, 0.7311, 1e-4);
}

TEST(ScorePair, DisjointSentenceScoresBiasOnly) {
  const auto kb = tiny_kb();
  const auto& strength = kb.entries()[1];
  const auto f = rerank_features("quux flux blorp", strength, kb, 0.0);
  for (std::size_t i = 0; i + 1 < kFeatureCount; ++i) EXPECT_EQ(f[i], 0.0) << i;
  EXPECT_EQ(f[kBias], 1.0);
  EXPECT_NEAR(score_pair(weights(std::vector<double>(kFeatureCount, 1.0)), "quux flux blorp",
                         strength, kb, 0.0),
              kSigmoidOne, 1e-12);
}

TEST(ScorePair, RejectsBadWeights) {
  const auto kb = tiny_kb();
  EXPECT_THROW(score_pair(weights({1, 2}), "x", kb.entries()[0], kb, 0.0), ContractViolation);
  EXPECT_THROW(score_pair(weights({NAN, 0, 0, 0, 0, 0, 0}), "x", kb.entries()[0], kb, 0.0),
               ContractViolation);
  EXPECT_THROW(score_pair(RerankerParams{}, "x", kb.entries()[0], kb, INFINITY),
               ContractViolation);
}

TEST(Features, StayInRange) {
  const auto& kb = fixture_kb();
  const char* sentences[] = {"Increasing the speed of the device reduces its strength.",
                             "", "Loss of energy at the expense of productivity",
                             "Weight of moving object"};
  for (const char* s : sentences) {
    for (const auto& e : kb.entries()) {
      const auto f = rerank_features(s, e, kb, 0.25);
      for (std::size_t i = 0; i < kFeatureCount; ++i) {
        EXPECT_GE(f[i], 0.0);
        EXPECT_LE(f[i], 1.0);
      }
      EXPECT_EQ(f[kBias], 1.0);
    }
  }
}

TEST(Features, PhraseMatchNeedsContiguousLabel) {
  const auto& kb = fixture_kb();
  const auto& e = kb.entries()[entry_of(1)];
  EXPECT_EQ(rerank_features("The weight of moving object grows", e, kb, 0)[kPhraseMatch], 1.0);
  EXPECT_EQ(rerank_features("The moving object weight grows", e, kb, 0)[kPhraseMatch], 0.0);
  EXPECT_EQ(rerank_features("The moving object weight grows", e, kb, 0)[kLabelCoverage], 1.0);
}

TEST(MarginLoss, HandValues) {
  const auto& kb = fixture_kb();
  // Only the bias weight is non-zero, so both logits equal it.
  TrainingTriple t{"Speed rises", entry_of(9), entry_of(14), 0.0, 0.0};
  auto p = weights({0, 0, 0, 0, 0, 0, 0.4});
  EXPECT_DOUBLE_EQ(margin_ranking_loss(p, t, kb, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(margin_ranking_loss(p, t, kb, 0.25), 0.25);

  // Retrieval similarity is the only active feature: logits 0.3 and 0.1.
  t = {"", entry_of(9), entry_of(14), 0.3, 0.1};
  p = weights({0, 0, 1, 0, 0, 0, 0});
  EXPECT_NEAR(margin_ranking_loss(p, t, kb, 1.0), 0.8, 1e-12);
  t = {"", entry_of(9), entry_of(14), 0.9, 0.1};
  EXPECT_EQ(margin_ranking_loss(p, t, kb, 0.5), 0.0);
}

TEST(MarginLoss, Errors) {
  const auto& kb = fixture_kb();
  EXPECT_THROW(margin_ranking_loss(RerankerParams{}, {"x", 0, 999, 0, 0}, kb, 1.0), DataError);
  EXPECT_THROW(margin_ranking_loss(RerankerParams{}, {"x", 3, 3, 0, 0}, kb, 1.0),
               ContractViolation);
  EXPECT_THROW(margin_ranking_loss(RerankerParams{}, {"x", 3, 4, 0, 0}, kb, 0.0),
               ContractViolation);
}

TEST(LossGradient, FlatRegionIsZero) {
  const auto& kb = fixture_kb();
  const TrainingTriple t{"", entry_of(9), entry_of(14), 0.9, 0.1};
  const auto g = loss_gradient(weights({0, 0, 1, 0, 0, 0, 0}), t, kb, 0.5);
  EXPECT_EQ(g, std::vector<double>(kFeatureCount, 0.0));
}

TEST(LossGradient, IdenticalFeaturesCancel) {
  // Two parameters with identical text give identical features.
  TrizParameter a{1, "Alpha", "same", {}, {}};
  TrizParameter b{2, "Alpha beta", "same", {}, {}};
  const auto kb = KnowledgeBase::from_parameters({a, b});
  const TrainingTriple t{"gamma", 0, 1, 0.2, 0.2};
  const auto p = weights({0.3, -0.2, 0.1, 0.5, 0.0, 0.7, 0.2});
  EXPECT_DOUBLE_EQ(margin_ranking_loss(p, t, kb, 1.0), 1.0);
  EXPECT_EQ(loss_gradient(p, t, kb, 1.0), std::vector<double>(kFeatureCount, 0.0));
}

TEST(LossGradient, MatchesFiniteDifferences) {
  const auto& kb = fixture_kb();
  Rng rng(31);
  const char* sentences[] = {
      "Increasing the speed of the conveyor at the expense of reliability",
      "Raising temperature while strength drops",
      "Higher productivity but more device complexity",
      "The weight of moving object rises leading to loss of energy",
  };
  int checked = 0;
  while (checked < 100) {
    TrainingTriple t{sentences[rng.index(4)], rng.index(39), rng.index(39), rng.uniform(),
                     rng.uniform()};
    if (t.positive == t.negative) continue;
    RerankerParams p;
    for (auto& w : p.weights) w = rng.uniform(-1.0, 1.0);
    if (margin_ranking_loss(p, t, kb, 1.0) < 1e-3) continue;
    const auto g = loss_gradient(p, t, kb, 1.0);
    const double h = 1e-5;
    for (std::size_t d = 0; d < kFeatureCount; ++d) {
      auto plus = p, minus = p;
      plus.weights[d] += h;
      minus.weights[d] -= h;
      const double fd = (margin_ranking_loss(plus, t, kb, 1.0) -
                         margin_ranking_loss(minus, t, kb, 1.0)) / (2 * h);
      const double scale = std::max(std::abs(g[d]), std::abs(fd));
      if (scale < 1e-8) continue;
      ASSERT_LT(std::abs(g[d] - fd) / scale, 1e-5) << "coordinate " << d;
    }
    ++checked;
  }
}

std::vector<TrainingTriple> name_triples(std::uint64_t seed, std::size_t n) {
  const auto& kb = fixture_kb();
  Rng rng(seed);
  std::vector<TrainingTriple> out;
  while (out.size() < n) {
    const auto pos = rng.index(39), neg = rng.index(39);
    if (pos == neg) continue;
    const auto& p = kb.parameter_of(kb.entries()[pos]);
    out.push_back({"Improving " + p.name + " matters", pos, neg, rng.uniform(0.5, 1.0),
                   rng.uniform(0.0, 0.5)});
  }
  return out;
}

TEST(TrainReranker, ZeroEpochsKeepsZeros) {
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto r = train_reranker(name_triples(1, 20), fixture_kb(), cfg);
  EXPECT_EQ(r.params, RerankerParams{});
  EXPECT_TRUE(r.epoch_loss.empty());
}

TEST(TrainReranker, SameSeedSameWeights) {
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.epochs = 10;
  const auto triples = name_triples(2, 100);
  const auto a = train_reranker(triples, fixture_kb(), cfg);
  const auto b = train_reranker(triples, fixture_kb(), cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_LT(a.epoch_loss.back(), 1.0);
}

TEST(TrainReranker, RanksHeldOutPairs) {
  const auto train = name_triples(3, 500);
  const auto test = name_triples(4, 100);
  const auto r = train_reranker(train, fixture_kb(), TrainConfig{});
  const auto& kb = fixture_kb();
  int correct = 0;
  for (const auto& t : test) {
    const double sp = score_pair(r.params, t.sentence, kb.entries()[t.positive], kb,
                                 t.positive_similarity);
    const double sn = score_pair(r.params, t.sentence, kb.entries()[t.negative], kb,
                                 t.negative_similarity);
    correct += sp > sn;
  }
  EXPECT_GE(correct, 95);
}

TEST(TrainReranker, RejectsEmptyInput) {
  EXPECT_THROW(train_reranker({}, fixture_kb(), TrainConfig{}), ContractViolation);
}

TEST(TrainReranker, DivergenceReportsEpoch) {
  TrainConfig cfg;
  cfg.learning_rate = std::numeric_limits<double>::infinity();
  cfg.epochs = 5;
  try {
    train_reranker(name_triples(6, 50), fixture_kb(), cfg);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.epoch(), 0);
  }
}

TEST(SelectRefined, EmptyAndUntruncated) {
  const auto& kb = fixture_kb();
  EXPECT_TRUE(select_refined(RerankerParams{}, "x", {}, kb, 3).empty());
  const std::vector<RetrievalCandidate> cands = {{4, 0.1}, {2, 0.9}, {7, 0.5}};
  const auto r = select_refined(weights({0, 0, 1, 0, 0, 0, 0}), "x", cands, kb, 10);
  EXPECT_EQ(r.entry_ids(), (std::vector<std::size_t>{2, 7, 4}));
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(r.items[i - 1].score, r.items[i].score);
}

TEST(SelectRefined, TruncatesAndBreaksTiesById) {
  const auto& kb = fixture_kb();
  const std::vector<RetrievalCandidate> cands = {{9, 0.1}, {3, 0.1}, {5, 0.1}, {1, 0.1}};
  const auto r = select_refined(RerankerParams{}, "x", cands, kb, 2);
  EXPECT_EQ(r.entry_ids(), (std::vector<std::size_t>{1, 3}));
}

TEST(SelectRefined, MinScoreDropsWeakCandidates) {
  const auto& kb = fixture_kb();
  const std::vector<RetrievalCandidate> cands = {{0, 0.9}, {1, 0.0}};
  const auto r = select_refined(weights({0, 0, 4, 0, 0, 0, -1}), "x", cands, kb, 3, 0.6);
  EXPECT_EQ(r.entry_ids(), (std::vector<std::size_t>{0}));
}

TEST(SelectRefined, TrainedParamsPreferSharedTokens) {
  const auto& kb = fixture_kb();
  const auto r = train_reranker(name_triples(8, 300), kb, TrainConfig{});
  // Entry for "Weight of moving object" shares weight/moving/object; Temperature none.
  const std::string s = "Weight grows on the moving object";
  const std::vector<RetrievalCandidate> cands = {{entry_of(17), 0.3}, {entry_of(1), 0.3}};
  const auto refined = select_refined(r.params, s, cands, kb, 2);
  EXPECT_EQ(refined.items.front().entry_id, entry_of(1));
}

TEST(SelectRefined, TrainedParamsBeatRetrievalOrderUnderDistractors) {
  const auto& kb = fixture_kb();
  Rng rng(12);
  std::vector<TrainingTriple> train;
  while (train.size() < 400) {
    const auto pos = rng.index(39), neg = rng.index(39);
    if (pos == neg) continue;
    const auto& p = kb.parameter_of(kb.entries()[pos]);
    train.push_back({"The " + p.name + " improved", pos, neg, rng.uniform(), rng.uniform()});
  }
  const auto params = train_reranker(train, kb, TrainConfig{}).params;

  int reranked_top = 0, retrieval_top = 0;
  for (int i = 0; i < 200; ++i) {
    const auto target = rng.index(39);
    const auto& p = kb.parameter_of(kb.entries()[target]);
    std::vector<RetrievalCandidate> cands = {{target, rng.uniform(0.2, 0.6)}};
    while (cands.size() < 5) {
      const auto d = rng.index(39);
      if (d != target) cands.push_back({d, rng.uniform(0.2, 0.9)});
    }
    std::sort(cands.begin(), cands.end(),
              [](const auto& a, const auto& b) { return a.similarity > b.similarity; });
    retrieval_top += cands.front().entry_id == target;
    const auto refined = select_refined(params, "We need more " + p.name + " here", cands, kb, 5);
    reranked_top += refined.items.front().entry_id == target;
  }
  EXPECT_GE(reranked_top, 190);
  EXPECT_LT(retrieval_top, reranked_top);
}

TEST(ParamsJson, RoundTripAndVersionCheck) {
  testing::TempDir dir("params");
  const auto p = weights({0.1, -0.2, 0.3, 0.4, 0.5, 0.6, 1e-17});
  save_params(p, dir.str("p.json"));
  EXPECT_EQ(load_params(dir.str("p.json")), p);
  EXPECT_THROW(params_from_json({{"weights", {1, 2}}, {"feature_version", kFeatureVersion}}),
               DataError);
  EXPECT_THROW(params_from_json({{"weights", p.weights}, {"feature_version", 99}}), DataError);
  EXPECT_THROW(params_from_json(nlohmann::json::array()), DataError);
}

}  // namespace
}  // namespace trizx
