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

#ifndef TRIZX_RERANK_HPP_
#define TRIZX_RERANK_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trizx/error.hpp"
#include "trizx/knowledge_base.hpp"
#include "trizx/random.hpp"
#include "trizx/retrieval.hpp"
#include "trizx/text.hpp"

namespace trizx {

// Feature layout of the lexical cross-encoder. Bump kFeatureVersion whenever
// the layout or any feature's definition changes; persisted params carry it.
inline constexpr std::size_t kFeatureCount = 7;
inline constexpr int kFeatureVersion = 1;
inline constexpr double kDefaultMargin = 1.0;
inline constexpr std::size_t kDefaultRefinedSize = 3;

enum FeatureSlot : std::size_t {
  kLabelOverlap = 0,        // Jaccard(sentence, name + synonyms)
  kDefinitionOverlap = 1,   // Jaccard(sentence, definition)
  kRetrievalSimilarity = 2,
  kExampleCoverage = 3,     // share of sentence tokens found in the examples
  kLabelCoverage = 4,       // best share of one label's tokens found in the sentence
  kPhraseMatch = 5,         // 1 if a label occurs as a contiguous phrase
  kBias = 6,
};

using RerankFeatures = std::array<double, kFeatureCount>;

struct RerankerParams {
  std::vector<double> weights = std::vector<double>(kFeatureCount, 0.0);

  bool operator==(const RerankerParams&) const = default;
};

// Sentence tokens in order plus the content-token set. Lexical features use
// content tokens only (function words dropped) so glue words like "of" or
// "the" do not count as evidence; phrase matching uses the full sequence.
struct SentenceTokens {
  std::vector<std::string> sequence;
  TokenSet content;

  explicit SentenceTokens(std::string_view sentence) : sequence(tokenize(sentence)) {
    for (const auto& t : sequence) {
      if (!is_function_word(t)) content.insert(t);
    }
  }
};

inline bool contains_phrase(const std::vector<std::string>& haystack,
                            const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), phrase.begin(), phrase.end()) !=
         haystack.end();
}

inline RerankFeatures rerank_features(const SentenceTokens& sentence,
                                      const TrizParameter& p, double retrieval_sim) {
  RerankFeatures f{};
  TokenSet label_union;
  double coverage = 0.0;
  bool phrase = false;
  auto visit_label = [&](const std::string& label) {
    const TokenSet toks = content_token_set(label);
    label_union.insert(toks.begin(), toks.end());
    if (!toks.empty()) {
      coverage = std::max(coverage, static_cast<double>(intersection_size(sentence.content, toks)) /
                                        static_cast<double>(toks.size()));
    }
    phrase = phrase || contains_phrase(sentence.sequence, tokenize(label));
  };
  visit_label(p.name);
  for (const auto& s : p.synonyms) visit_label(s);

  TokenSet example_tokens;
  for (const auto& ex : p.examples) {
    auto t = content_token_set(ex);
    example_tokens.insert(t.begin(), t.end());
  }

  f[kLabelOverlap] = jaccard(sentence.content, label_union);
  f[kDefinitionOverlap] = jaccard(sentence.content, content_token_set(p.definition));
  f[kRetrievalSimilarity] = retrieval_sim;
  f[kExampleCoverage] =
      sentence.content.empty()
          ? 0.0
          : static_cast<double>(intersection_size(sentence.content, example_tokens)) /
                static_cast<double>(sentence.content.size());
  f[kLabelCoverage] = coverage;
  f[kPhraseMatch] = phrase ? 1.0 : 0.0;
  f[kBias] = 1.0;
  return f;
}

inline RerankFeatures rerank_features(std::string_view sentence,
                                      const KnowledgeEntry& entry,
                                      const KnowledgeBase& kb,
                                      double retrieval_sim) {
  return rerank_features(SentenceTokens(sentence), kb.parameter_of(entry), retrieval_sim);
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double rerank_logit(const RerankerParams& params, const RerankFeatures& f) {
  if (params.weights.size() != kFeatureCount) {
    throw ContractViolation("reranker expects " + std::to_string(kFeatureCount) +
                            " weights, got " + std::to_string(params.weights.size()));
  }
  double z = 0.0;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!std::isfinite(params.weights[i]) || !std::isfinite(f[i])) {
      throw ContractViolation("reranker: non-finite weight or feature at slot " +
                              std::to_string(i));
    }
    z += params.weights[i] * f[i];
  }
  return z;
}

// Relevance of `entry` to `sentence`, in (0, 1).
inline double score_pair(const RerankerParams& params, std::string_view sentence,
                         const KnowledgeEntry& entry, const KnowledgeBase& kb,
                         double retrieval_sim) {
  return sigmoid(rerank_logit(params, rerank_features(sentence, entry, kb, retrieval_sim)));
}

// Sentence with one relevant and one irrelevant entry. The similarities are
// the retrieval cosines of each entry against the sentence.
struct TrainingTriple {
  std::string sentence;
  std::size_t positive = 0;
  std::size_t negative = 0;
  double positive_similarity = 0.0;
  double negative_similarity = 0.0;
};

namespace detail {

inline const KnowledgeEntry& resolve_entry(const KnowledgeBase& kb, std::size_t id) {
  const auto* e = kb.find_entry(id);
  if (e == nullptr) throw DataError("unknown entry id " + std::to_string(id));
  return *e;
}

struct TripleFeatures {
  RerankFeatures positive;
  RerankFeatures negative;
};

inline TripleFeatures triple_features(const TrainingTriple& t, const KnowledgeBase& kb) {
  if (t.positive == t.negative) {
    throw ContractViolation("training triple has identical positive and negative");
  }
  const auto& pos = resolve_entry(kb, t.positive);
  const auto& neg = resolve_entry(kb, t.negative);
  return {rerank_features(t.sentence, pos, kb, t.positive_similarity),
          rerank_features(t.sentence, neg, kb, t.negative_similarity)};
}

inline double hinge(const RerankerParams& params, const TripleFeatures& f, double margin) {
  return std::max(0.0, margin - rerank_logit(params, f.positive) +
                           rerank_logit(params, f.negative));
}

inline void check_margin(double margin) {
  if (!(margin > 0.0)) throw ContractViolation("margin must be > 0");
}

}  // namespace detail

// max(0, margin - z+ + z-) on pre-sigmoid logits.
inline double margin_ranking_loss(const RerankerParams& params,
                                  const TrainingTriple& triple,
                                  const KnowledgeBase& kb, double margin) {
  detail::check_margin(margin);
  return detail::hinge(params, detail::triple_features(triple, kb), margin);
}

// d loss / d weights: zero on the flat side of the hinge, f- - f+ otherwise.
inline std::vector<double> loss_gradient(const RerankerParams& params,
                                         const TrainingTriple& triple,
                                         const KnowledgeBase& kb, double margin) {
  detail::check_margin(margin);
  const auto f = detail::triple_features(triple, kb);
  std::vector<double> g(kFeatureCount, 0.0);
  if (detail::hinge(params, f, margin) <= 0.0) return g;
  for (std::size_t i = 0; i < kFeatureCount; ++i) g[i] = f.negative[i] - f.positive[i];
  return g;
}

struct TrainConfig {
  double margin = kDefaultMargin;
  double learning_rate = 0.5;
  int epochs = 40;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
};

struct TrainResult {
  RerankerParams params;
  std::vector<double> epoch_loss;  // mean hinge over all triples after each epoch
};

// Mini-batch gradient descent on the averaged hinge, starting from zero
// weights. Batches follow a seeded per-epoch shuffle, so a given seed always
// yields the same weights.
inline TrainResult train_reranker(const std::vector<TrainingTriple>& triples,
                                  const KnowledgeBase& kb, const TrainConfig& cfg) {
  if (triples.empty()) throw ContractViolation("train_reranker: no training triples");
  detail::check_margin(cfg.margin);
  const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);

  std::vector<detail::TripleFeatures> feats;
  feats.reserve(triples.size());
  for (const auto& t : triples) feats.push_back(detail::triple_features(t, kb));

  TrainResult result;
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(feats.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto& w = result.params.weights;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<double> grad(kFeatureCount, 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const auto& f = feats[order[i]];
        if (detail::hinge(result.params, f, cfg.margin) <= 0.0) continue;
        for (std::size_t d = 0; d < kFeatureCount; ++d) {
          grad[d] += f.negative[d] - f.positive[d];
        }
      }
      const double scale = cfg.learning_rate / static_cast<double>(end - start);
      for (std::size_t d = 0; d < kFeatureCount; ++d) {
        w[d] -= scale * grad[d];
        if (!std::isfinite(w[d])) throw TrainingError("non-finite weight", epoch);
      }
    }
    double total = 0.0;
    for (const auto& f : feats) total += detail::hinge(result.params, f, cfg.margin);
    const double mean = total / static_cast<double>(feats.size());
    if (!std::isfinite(mean)) throw TrainingError("non-finite training loss", epoch);
    result.epoch_loss.push_back(mean);
  }
  return result;
}

struct RefinedItem {
  std::size_t entry_id = 0;
  double score = 0.0;

  bool operator==(const RefinedItem&) const = default;
};

// Reranked context, best first; never longer than the requested size.
struct RefinedContext {
  std::vector<RefinedItem> items;

  std::vector<std::size_t> entry_ids() const {
    std::vector<std::size_t> ids;
    for (const auto& i : items) ids.push_back(i.entry_id);
    return ids;
  }
  bool empty() const { return items.empty(); }
  std::size_t size() const { return items.size(); }
};

// Scores each candidate, sorts by score (ties: lower entry id) and keeps the
// best m. With min_score set, lower-scoring candidates are dropped as well.
inline RefinedContext select_refined(const RerankerParams& params,
                                     std::string_view sentence,
                                     const std::vector<RetrievalCandidate>& candidates,
                                     const KnowledgeBase& kb, std::size_t m,
                                     std::optional<double> min_score = std::nullopt) {
  RefinedContext out;
  const SentenceTokens sentence_tokens(sentence);
  for (const auto& c : candidates) {
    const auto& entry = detail::resolve_entry(kb, c.entry_id);
    const auto f = rerank_features(sentence_tokens, kb.parameter_of(entry), c.similarity);
    const double s = sigmoid(rerank_logit(params, f));
    if (min_score && s < *min_score) continue;
    out.items.push_back({c.entry_id, s});
  }
  std::sort(out.items.begin(), out.items.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entry_id < b.entry_id;
  });
  if (out.items.size() > m) out.items.resize(m);
  return out;
}

inline nlohmann::json params_to_json(const RerankerParams& p) {
  return {{"weights", p.weights}, {"feature_version", kFeatureVersion}};
}

inline RerankerParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("weights") || !j.contains("feature_version")) {
    throw DataError("reranker params need 'weights' and 'feature_version'");
  }
  if (!j["feature_version"].is_number_integer() ||
      j["feature_version"].get<int>() != kFeatureVersion) {
    throw DataError("reranker params have feature_version " +
                    j["feature_version"].dump() + ", expected " +
                    std::to_string(kFeatureVersion));
  }
  RerankerParams p;
  try {
    p.weights = j["weights"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("reranker weights must be numbers");
  }
  if (p.weights.size() != kFeatureCount) {
    throw DataError("reranker params hold " + std::to_string(p.weights.size()) +
                    " weights, expected " + std::to_string(kFeatureCount));
  }
  return p;
}

inline void save_params(const RerankerParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << params_to_json(p).dump() << '\n';
}

inline RerankerParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed params file: " + path);
  return params_from_json(j);
}

}  // namespace trizx

#endif  // TRIZX_RERANK_HPP_
