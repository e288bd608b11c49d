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

#ifndef TRIZX_PIPELINE_HPP_
#define TRIZX_PIPELINE_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "trizx/embedding.hpp"
#include "trizx/error.hpp"
#include "trizx/knowledge_base.hpp"
#include "trizx/llm.hpp"
#include "trizx/prompting.hpp"
#include "trizx/rerank.hpp"
#include "trizx/retrieval.hpp"

namespace trizx {

enum class Ablation { kFull, kNoRetrieval, kNoRerank, kNoStructuredPrompt };

inline constexpr std::array<Ablation, 4> kAllAblations = {
    Ablation::kFull, Ablation::kNoRetrieval, Ablation::kNoRerank,
    Ablation::kNoStructuredPrompt};

inline const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNoRetrieval: return "no_retrieval";
    case Ablation::kNoRerank: return "no_rerank";
    case Ablation::kNoStructuredPrompt: return "no_structured_prompt";
  }
  return "unknown";
}

inline Ablation parse_ablation(std::string_view s) {
  for (auto a : kAllAblations) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown ablation '" + std::string(s) + "'");
}

enum class BackendKind { kMock, kRemote };

struct PipelineConfig {
  std::size_t k = kDefaultTopK;
  std::size_t m = kDefaultRefinedSize;
  Ablation ablation = Ablation::kFull;
  BackendKind backend = BackendKind::kMock;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::optional<double> min_score;  // optional reranker score floor
};

inline constexpr std::string_view kRepairInstruction = "Respond with only the JSON object.";

enum class SlotOutcome { kMatched, kNoMatch, kAbstained };

inline const char* to_string(SlotOutcome o) {
  switch (o) {
    case SlotOutcome::kMatched: return "matched";
    case SlotOutcome::kNoMatch: return "no_match";
    case SlotOutcome::kAbstained: return "abstained";
  }
  return "unknown";
}

// Per-sentence log line.
struct TraceRecord {
  std::size_t sentence_id = 0;
  std::vector<std::size_t> candidate_ids;
  std::vector<std::size_t> refined_ids;
  std::string prompt_version;
  std::string raw_response;  // last attempt
  std::optional<int> improving_id;
  std::optional<int> worsening_id;
  SlotOutcome improving_outcome = SlotOutcome::kAbstained;
  SlotOutcome worsening_outcome = SlotOutcome::kAbstained;
  bool repair_attempted = false;
  bool parse_failed = false;
  bool backend_error = false;
  std::string error_message;
};

inline nlohmann::json trace_to_json(const TraceRecord& t) {
  auto opt = [](const std::optional<int>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"sentence_id", t.sentence_id},
          {"candidate_ids", t.candidate_ids},
          {"refined_ids", t.refined_ids},
          {"prompt_version", t.prompt_version},
          {"raw_response", t.raw_response},
          {"improving_id", opt(t.improving_id)},
          {"worsening_id", opt(t.worsening_id)},
          {"improving_outcome", to_string(t.improving_outcome)},
          {"worsening_outcome", to_string(t.worsening_outcome)},
          {"errors",
           {{"backend_error", t.backend_error},
            {"parse_failed", t.parse_failed},
            {"repair_attempted", t.repair_attempted},
            {"message", t.error_message}}}};
}

// Serializes trace lines from concurrent workers onto one stream.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out) : out_(&out) {}

  void write(const TraceRecord& t) {
    const auto line = trace_to_json(t).dump(-1, ' ', false,
                                            nlohmann::json::error_handler_t::replace);
    std::lock_guard lock(mu_);
    *out_ << line << '\n';
  }

 private:
  std::ostream* out_;
  std::mutex mu_;
};

struct ExtractionResult {
  ContradictionPair pair;
  TraceRecord trace;
};

// Sentence -> (improving, worsening) over shared, immutable components.
// extract() is const and may run concurrently.
class Pipeline {
 public:
  Pipeline(const KnowledgeBase& kb, const VectorIndex& index,
           const RerankerParams& params, const Embedder& embedder,
           const LlmBackend& backend, PipelineConfig cfg = {},
           PromptTemplate tmpl = {})
      : kb_(kb),
        index_(index),
        params_(params),
        embedder_(embedder),
        backend_(backend),
        cfg_(cfg),
        tmpl_(std::move(tmpl)) {
    if (!index_.kb_hash().empty() && index_.kb_hash() != kb_.content_hash()) {
      throw IntegrityError("index and knowledge base come from different sources");
    }
    if (index_.size() != kb_.entry_count()) {
      throw IntegrityError("index holds " + std::to_string(index_.size()) +
                           " vectors for " + std::to_string(kb_.entry_count()) + " entries");
    }
    if (index_.dim() != embedder_.dim() && index_.size() > 0) {
      throw IntegrityError("index dimension differs from embedder dimension");
    }
    validate_template(tmpl_);
  }

  const PipelineConfig& config() const { return cfg_; }

  ExtractionResult extract(std::string_view sentence, std::size_t sentence_id = 0) const {
    ExtractionResult r;
    TraceRecord& t = r.trace;
    t.sentence_id = sentence_id;
    t.prompt_version = tmpl_.version;

    std::optional<StructuredPrompt> prompt;
    try {
      RefinedContext refined;
      if (cfg_.ablation != Ablation::kNoRetrieval) {
        const auto query = embedder_.embed(sentence);
        const auto candidates = top_k(index_, query, cfg_.k);
        for (const auto& c : candidates) t.candidate_ids.push_back(c.entry_id);
        if (cfg_.ablation == Ablation::kNoRerank) {
          for (std::size_t i = 0; i < std::min(cfg_.m, candidates.size()); ++i) {
            refined.items.push_back({candidates[i].entry_id, candidates[i].similarity});
          }
        } else {
          refined = select_refined(params_, sentence, candidates, kb_, cfg_.m, cfg_.min_score);
        }
      }
      t.refined_ids = refined.entry_ids();
      prompt = build_prompt(sentence, refined, kb_, tmpl_,
                            cfg_.ablation != Ablation::kNoStructuredPrompt);
    } catch (const BackendError& e) {
      t.backend_error = true;
      t.error_message = e.what();
      return r;
    }

    std::optional<RawPair> raw;
    try {
      t.raw_response = invoke_llm(backend_, *prompt).raw_text;
      raw = parse_response(t.raw_response);
      if (!raw) {
        t.repair_attempted = true;
        const std::string repaired = prompt->text + "\n" + std::string(kRepairInstruction);
        t.raw_response = invoke_llm(backend_, repaired).raw_text;
        raw = parse_response(t.raw_response);
      }
    } catch (const BackendError& e) {
      t.backend_error = true;
      t.error_message = e.what();
      return r;
    }
    if (!raw) {
      t.parse_failed = true;
      return r;
    }

    auto resolve = [this](const std::optional<std::string>& text, std::optional<int>& id,
                          std::optional<std::string>& text_out, SlotOutcome& outcome) {
      text_out = text;
      if (!text || trim(*text).empty()) {
        outcome = SlotOutcome::kAbstained;
        return;
      }
      id = canonicalize(*text, kb_);
      outcome = id ? SlotOutcome::kMatched : SlotOutcome::kNoMatch;
    };
    resolve(raw->improving, r.pair.improving, r.pair.improving_text, t.improving_outcome);
    resolve(raw->worsening, r.pair.worsening, r.pair.worsening_text, t.worsening_outcome);
    t.improving_id = r.pair.improving;
    t.worsening_id = r.pair.worsening;
    return r;
  }

  // Runs extract() over all sentences with at most `jobs` in flight
  // (0 picks the config value). Results keep input order; traces are
  // written as sentences finish.
  std::vector<ExtractionResult> extract_all(const std::vector<std::string>& sentences,
                                            TraceWriter* trace = nullptr,
                                            std::size_t jobs = 0) const {
    std::vector<ExtractionResult> out(sentences.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min(jobs == 0 ? cfg_.jobs : jobs, sentences.size()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto work = [&] {
      for (std::size_t i = next++; i < sentences.size(); i = next++) {
        try {
          out[i] = extract(sentences[i], i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next = sentences.size();
          return;
        }
        if (trace != nullptr) trace->write(out[i].trace);
      }
    };
    if (workers == 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
  }

 private:
  const KnowledgeBase& kb_;
  const VectorIndex& index_;
  const RerankerParams& params_;
  const Embedder& embedder_;
  const LlmBackend& backend_;
  PipelineConfig cfg_;
  PromptTemplate tmpl_;
};

}  // namespace trizx

#endif  // TRIZX_PIPELINE_HPP_
