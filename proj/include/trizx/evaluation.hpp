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

#ifndef TRIZX_EVALUATION_HPP_
#define TRIZX_EVALUATION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trizx/embedding.hpp"
#include "trizx/error.hpp"
#include "trizx/knowledge_base.hpp"
#include "trizx/llm.hpp"
#include "trizx/pipeline.hpp"
#include "trizx/random.hpp"
#include "trizx/rerank.hpp"
#include "trizx/retrieval.hpp"

namespace trizx {

// One annotated sentence with its gold parameter pair.
struct DatasetRecord {
  std::string sentence;
  int improving_id = 0;
  int worsening_id = 0;
  std::string improving_desc;
  std::string worsening_desc;
  std::string domain_tag;

  bool operator==(const DatasetRecord&) const = default;
};

inline nlohmann::json record_to_json(const DatasetRecord& r) {
  return {{"sentence", r.sentence},
          {"improving_id", r.improving_id},
          {"worsening_id", r.worsening_id},
          {"improving_desc", r.improving_desc},
          {"worsening_desc", r.worsening_desc},
          {"domain_tag", r.domain_tag}};
}

inline void save_dataset(const std::vector<DatasetRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

// Reads dataset JSONL and checks every gold id against the knowledge base.
// Descriptions and domain tag are optional.
inline std::vector<DatasetRecord> parse_dataset(std::istream& in, const KnowledgeBase& kb,
                                                std::vector<std::string>* warnings = nullptr) {
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw LoadError("not a JSON object", lineno);
    DatasetRecord r;
    r.sentence = detail::string_field(j, "sentence", lineno);
    if (trim(r.sentence).empty()) throw LoadError("empty sentence", lineno);
    for (auto [key, slot] : {std::pair{"improving_id", &r.improving_id},
                             std::pair{"worsening_id", &r.worsening_id}}) {
      const auto it = j.find(key);
      if (it == j.end()) throw LoadError(std::string("missing field '") + key + "'", lineno);
      if (!it->is_number_integer()) {
        throw LoadError(std::string("field '") + key + "' must be an integer", lineno);
      }
      *slot = it->get<int>();
      if (kb.find_parameter(*slot) == nullptr) {
        throw LoadError(std::string(key) + " " + std::to_string(*slot) +
                            " is not a known parameter",
                        lineno);
      }
    }
    for (auto [key, slot] : {std::pair{"improving_desc", &r.improving_desc},
                             std::pair{"worsening_desc", &r.worsening_desc},
                             std::pair{"domain_tag", &r.domain_tag}}) {
      if (j.contains(key)) *slot = detail::string_field(j, key, lineno);
    }
    out.push_back(std::move(r));
  }
  if (out.empty() && warnings != nullptr) warnings->push_back("dataset is empty");
  return out;
}

inline std::vector<DatasetRecord> load_dataset(const std::string& path, const KnowledgeBase& kb,
                                               std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path, 0);
  return parse_dataset(in, kb, warnings);
}

struct SplitSet {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> validation;
  std::vector<DatasetRecord> test;
  std::uint64_t seed = 0;
};

// Seeded shuffle, then contiguous 8:1:1. Validation and test get
// floor(n/10) each; the remainder goes to train.
inline SplitSet split_dataset(const std::vector<DatasetRecord>& records, std::uint64_t seed) {
  if (records.size() < 10) {
    throw DataError("split needs at least 10 records, got " + std::to_string(records.size()));
  }
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t tenth = records.size() / 10;
  const std::size_t n_train = records.size() - 2 * tenth;
  SplitSet s;
  s.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_train ? s.train : (i < n_train + tenth ? s.validation : s.test);
    dst.push_back(records[order[i]]);
  }
  return s;
}

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

struct SlotCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  bool operator==(const SlotCounts&) const = default;
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double pair_exact_accuracy = 0.0;
  SlotCounts counts;  // summed over seeds for averaged reports
  std::vector<std::uint64_t> seeds_used;
  std::vector<MetricsReport> per_seed;
  std::vector<std::uint64_t> failed_seeds;
  std::vector<std::string> errors;
  bool partial = false;
};

// Strict slot-level scoring on canonical ids. Each sentence holds two gold
// slots. A wrong non-null prediction is both a false positive and a false
// negative; a null prediction is only a false negative.
inline MetricsReport score_predictions(const std::vector<ContradictionPair>& preds,
                                       const std::vector<DatasetRecord>& golds) {
  if (preds.size() != golds.size()) {
    throw ContractViolation("score_predictions: " + std::to_string(preds.size()) +
                            " predictions for " + std::to_string(golds.size()) + " records");
  }
  MetricsReport r;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    bool both = true;
    for (auto [pred, gold] : {std::pair{preds[i].improving, golds[i].improving_id},
                              std::pair{preds[i].worsening, golds[i].worsening_id}}) {
      if (!pred) {
        ++r.counts.fn;
        both = false;
      } else if (*pred == gold) {
        ++r.counts.tp;
      } else {
        ++r.counts.fp;
        ++r.counts.fn;
        both = false;
      }
    }
    if (both) ++exact;
  }
  const auto& c = r.counts;
  r.precision =
      c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  r.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.f1 = f1_score(r.precision, r.recall);
  r.pair_exact_accuracy =
      preds.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(preds.size());
  return r;
}

// Triples for reranker training: for each gold slot, the slot's entry
// against an entry drawn uniformly from the non-gold entries.
inline std::vector<TrainingTriple> make_training_triples(
    const std::vector<DatasetRecord>& records, const KnowledgeBase& kb,
    const VectorIndex& index, const Embedder& embedder, Rng& rng) {
  std::vector<TrainingTriple> out;
  for (const auto& r : records) {
    std::vector<std::size_t> negatives;
    for (const auto& e : kb.entries()) {
      if (e.parameter_id != r.improving_id && e.parameter_id != r.worsening_id) {
        negatives.push_back(e.entry_id);
      }
    }
    if (negatives.empty()) continue;
    const auto q = embedder.embed(r.sentence);
    for (int gold : {r.improving_id, r.worsening_id}) {
      const auto pos = std::find_if(kb.entries().begin(), kb.entries().end(),
                                    [gold](const auto& e) { return e.parameter_id == gold; });
      if (pos == kb.entries().end()) continue;
      const std::size_t neg = negatives[rng.index(negatives.size())];
      out.push_back(TrainingTriple{r.sentence, pos->entry_id, neg,
                                   cosine_similarity(q, index.vector(pos->entry_id)),
                                   cosine_similarity(q, index.vector(neg))});
    }
  }
  return out;
}

// Everything an evaluation run needs besides the records.
struct EvaluationContext {
  const KnowledgeBase& kb;
  const VectorIndex& index;
  const Embedder& embedder;
  const LlmBackend& backend;
  PromptTemplate prompt_template{};
  TrainConfig train{};
  // Called for every test sentence; used for trace output and audits.
  std::function<void(std::uint64_t seed, const DatasetRecord&, const ExtractionResult&)>
      on_result{};
};

// One seed: split, train the reranker on the train split, extract the test
// split, score it.
inline MetricsReport run_seed(const PipelineConfig& config,
                              const std::vector<DatasetRecord>& records,
                              std::uint64_t seed, const EvaluationContext& ctx) {
  const auto split = split_dataset(records, seed);
  if (split.test.empty()) throw DataError("empty evaluation set");

  Rng rng(seed);
  RerankerParams params;
  const auto triples = make_training_triples(split.train, ctx.kb, ctx.index, ctx.embedder, rng);
  if (!triples.empty()) {
    TrainConfig tc = ctx.train;
    tc.seed = seed;
    params = train_reranker(triples, ctx.kb, tc).params;
  }

  PipelineConfig cfg = config;
  cfg.seed = seed;
  Pipeline pipeline(ctx.kb, ctx.index, params, ctx.embedder, ctx.backend, cfg,
                    ctx.prompt_template);
  std::vector<std::string> sentences;
  for (const auto& r : split.test) sentences.push_back(r.sentence);
  const auto results = pipeline.extract_all(sentences);

  std::vector<ContradictionPair> preds;
  for (std::size_t i = 0; i < results.size(); ++i) {
    preds.push_back(results[i].pair);
    if (ctx.on_result) ctx.on_result(seed, split.test[i], results[i]);
  }
  auto report = score_predictions(preds, split.test);
  report.seeds_used = {seed};
  return report;
}

// Runs every seed and averages precision, recall, F1 and pair accuracy.
// A failing seed is recorded and the report marked partial; the rest still run.
inline MetricsReport run_evaluation(const PipelineConfig& config,
                                    const std::vector<DatasetRecord>& records,
                                    const std::vector<std::uint64_t>& seeds,
                                    const EvaluationContext& ctx) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (records.empty()) throw DataError("empty evaluation set");
  MetricsReport mean;
  for (auto seed : seeds) {
    try {
      mean.per_seed.push_back(run_seed(config, records, seed, ctx));
      mean.seeds_used.push_back(seed);
    } catch (const std::exception& e) {
      mean.partial = true;
      mean.failed_seeds.push_back(seed);
      mean.errors.push_back("seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  if (mean.per_seed.empty()) {
    throw DataError("every seed failed: " + (mean.errors.empty() ? "" : mean.errors.front()));
  }
  const double n = static_cast<double>(mean.per_seed.size());
  for (const auto& r : mean.per_seed) {
    mean.precision += r.precision / n;
    mean.recall += r.recall / n;
    mean.f1 += r.f1 / n;
    mean.pair_exact_accuracy += r.pair_exact_accuracy / n;
    mean.counts.tp += r.counts.tp;
    mean.counts.fp += r.counts.fp;
    mean.counts.fn += r.counts.fn;
  }
  return mean;
}

struct AblationReport {
  std::vector<std::pair<Ablation, MetricsReport>> variants;

  const MetricsReport& at(Ablation a) const {
    for (const auto& [v, r] : variants) {
      if (v == a) return r;
    }
    throw ContractViolation(std::string("ablation report lacks ") + to_string(a));
  }
};

inline AblationReport run_ablation(const PipelineConfig& base,
                                   const std::vector<DatasetRecord>& records,
                                   const std::vector<std::uint64_t>& seeds,
                                   const EvaluationContext& ctx) {
  AblationReport out;
  for (auto a : kAllAblations) {
    PipelineConfig cfg = base;
    cfg.ablation = a;
    out.variants.emplace_back(a, run_evaluation(cfg, records, seeds, ctx));
  }
  return out;
}

// --- synthetic corpus ------------------------------------------------------

// Sentence frames; {A} is the improving mention and {B} the worsening one.
// Their words avoid every parameter name and synonym token so the frame
// itself never favors a parameter.
inline constexpr std::array<std::string_view, 3> kSyntheticFrames = {
    "Improving {A}{CUE}{B} degrades.",
    "Increasing {A}{CUE}{B} drops.",
    "Raising {A}{CUE}{B} suffers.",
};

inline constexpr std::array<std::string_view, 4> kDomainTags = {
    "mechanics", "materials", "electronics", "thermal"};

// Synonyms and one-word-dropped variants of a parameter name that do not
// contain any of the `avoid` names.
inline std::vector<std::string> mention_variants(const TrizParameter& p,
                                                 const std::vector<std::string>& avoid) {
  std::vector<std::string> raw = p.synonyms;
  std::vector<std::string> words;
  {
    std::istringstream ss(p.name);
    for (std::string w; ss >> w;) words.push_back(w);
  }
  if (words.size() >= 2) {
    for (std::size_t drop = 0; drop < words.size(); ++drop) {
      std::vector<std::string> kept;
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (i != drop) kept.push_back(words[i]);
      }
      raw.push_back(join(kept, " "));
    }
  }
  std::vector<std::string> out;
  for (auto& v : raw) {
    const bool clash = std::any_of(avoid.begin(), avoid.end(),
                                   [&v](const auto& name) { return contains_ci(v, name); });
    if (!clash && std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

// Template sentences over random parameter pairs. With probability `noise`
// each mention is a synonym or paraphrase instead of the exact name.
inline std::vector<DatasetRecord> generate_synthetic(const KnowledgeBase& kb, std::size_t n,
                                                     double noise, std::uint64_t seed) {
  const auto& params = kb.parameters();
  if (params.size() < 2) throw DataError("synthetic generation needs at least 2 parameters");
  if (n == 0) throw ContractViolation("synthetic generation needs n >= 1");
  if (!(noise >= 0.0 && noise <= 1.0)) throw ContractViolation("noise must lie in [0, 1]");

  Rng rng(seed);
  std::vector<DatasetRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = rng.index(params.size());
    std::size_t b = rng.index(params.size() - 1);
    if (b >= a) ++b;
    const auto& pa = params[a];
    const auto& pb = params[b];
    const auto frame = kSyntheticFrames[rng.index(kSyntheticFrames.size())];
    const auto cue = kAdversativeCues[rng.index(kAdversativeCues.size())];

    auto mention = [&](const TrizParameter& p) {
      if (!rng.bernoulli(noise)) return p.name;
      const auto variants = mention_variants(p, {pa.name, pb.name});
      if (variants.empty()) {
        throw DataError("parameter " + std::to_string(p.id) +
                        " has no paraphrase avoiding both gold names");
      }
      return variants[rng.index(variants.size())];
    };
    const std::string ma = mention(pa);
    const std::string mb = mention(pb);

    std::string s(frame);
    s = replace_all(s, "{A}", ma);
    s = replace_all(s, "{CUE}", cue);
    s = replace_all(s, "{B}", mb);

    out.push_back(DatasetRecord{std::move(s), pa.id, pb.id, pa.definition, pb.definition,
                                std::string(kDomainTags[rng.index(kDomainTags.size())])});
  }
  return out;
}

// --- reporting -------------------------------------------------------------

inline nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json j = {{"precision", r.precision},
                      {"recall", r.recall},
                      {"f1", r.f1},
                      {"pair_exact_accuracy", r.pair_exact_accuracy},
                      {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}}},
                      {"seeds_used", r.seeds_used},
                      {"partial", r.partial}};
  if (!r.per_seed.empty()) {
    j["per_seed"] = nlohmann::json::array();
    for (const auto& s : r.per_seed) j["per_seed"].push_back(report_to_json(s));
  }
  if (!r.failed_seeds.empty()) {
    j["failed_seeds"] = r.failed_seeds;
    j["errors"] = r.errors;
  }
  return j;
}

inline nlohmann::json ablation_to_json(const AblationReport& a) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [v, r] : a.variants) j[to_string(v)] = report_to_json(r);
  return j;
}

// One row of the comparison table; values are percentages.
struct TableRow {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline TableRow table_row(std::string label, const MetricsReport& r) {
  return {std::move(label), 100.0 * r.precision, 100.0 * r.recall, 100.0 * r.f1};
}

inline std::string ablation_label(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "Full pipeline";
    case Ablation::kNoRetrieval: return "w/o Retrieval Module";
    case Ablation::kNoRerank: return "w/o Reranking";
    case Ablation::kNoStructuredPrompt: return "w/o Structured Prompt";
  }
  return "unknown";
}

// Aligned text table, one decimal place:
//   Model/Variant  Precision (%)  Recall (%)  F1-score (%)
inline std::string format_table(const std::vector<TableRow>& rows) {
  const std::array<std::string, 4> head = {"Model/Variant", "Precision (%)", "Recall (%)",
                                           "F1-score (%)"};
  std::size_t w0 = head[0].size();
  for (const auto& r : rows) w0 = std::max(w0, r.label.size());
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return std::string(buf);
  };
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::string out = pad(head[0], w0);
  for (std::size_t i = 1; i < head.size(); ++i) out += "  " + head[i];
  out += '\n';
  for (const auto& r : rows) {
    std::string line = pad(r.label, w0);
    const std::array<double, 3> v = {r.precision, r.recall, r.f1};
    for (std::size_t i = 0; i < 3; ++i) {
      const auto s = num(v[i]);
      const std::size_t pad = head[i + 1].size() - std::min(head[i + 1].size(), s.size());
      line += "  " + std::string(pad, ' ') + s;
    }
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace trizx

#endif  // TRIZX_EVALUATION_HPP_
