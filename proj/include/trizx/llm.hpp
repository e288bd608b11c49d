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

#ifndef TRIZX_LLM_HPP_
#define TRIZX_LLM_HPP_

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "trizx/error.hpp"
#include "trizx/knowledge_base.hpp"
#include "trizx/prompting.hpp"
#include "trizx/text.hpp"

namespace trizx {

struct LlmResponse {
  std::string raw_text;  // verbatim, including unusable output
  std::string backend_id;
  std::chrono::nanoseconds latency{0};
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  // Returns the completion for a rendered prompt. Throws BackendError once
  // the backend's own retry budget is spent.
  virtual std::string complete(const std::string& prompt_text) const = 0;
  virtual std::string id() const = 0;
};

inline LlmResponse invoke_llm(const LlmBackend& backend, const std::string& prompt_text) {
  const auto start = std::chrono::steady_clock::now();
  LlmResponse r;
  r.raw_text = backend.complete(prompt_text);
  r.backend_id = backend.id();
  r.latency = std::chrono::steady_clock::now() - start;
  return r;
}

inline LlmResponse invoke_llm(const LlmBackend& backend, const StructuredPrompt& prompt) {
  return invoke_llm(backend, prompt.text);
}

// Adversative cues in priority order. A sentence is split at the first cue
// of this list that it contains, not at the leftmost cue.
inline constexpr std::array<std::string_view, 7> kAdversativeCues = {
    " at the expense of ", " at the cost of ", " but ", " however ",
    " while ", " whereas ", " leading to "};

struct SentenceSegments {
  std::string improving;
  std::string worsening;
};

inline SentenceSegments split_at_cue(std::string_view sentence) {
  const std::string lowered = to_lower(sentence);
  for (const auto cue : kAdversativeCues) {
    const auto pos = lowered.find(cue);
    if (pos != std::string::npos) {
      return {std::string(sentence.substr(0, pos)),
              std::string(sentence.substr(pos + cue.size()))};
    }
  }
  return {std::string(sentence), std::string(sentence)};
}

inline std::string render_pair_json(const std::optional<std::string>& improving,
                                    const std::optional<std::string>& worsening) {
  auto value = [](const std::optional<std::string>& v) {
    return v ? nlohmann::json(*v).dump() : std::string("null");
  };
  return "{\"" + std::string(kImprovingKey) + "\": " + value(improving) + ", \"" +
         std::string(kWorseningKey) + "\": " + value(worsening) + "}";
}

// Deterministic stand-in for a hosted model. It reads the target sentence
// and context back out of the prompt, splits the sentence at the first
// adversative cue, and answers each half with the context entry whose name
// and synonyms overlap it most. It can only name parameters that appear in
// the prompt's context.
class MockBackend final : public LlmBackend {
 public:
  explicit MockBackend(const KnowledgeBase& kb, PromptTemplate tmpl = {})
      : kb_(&kb), tmpl_(std::move(tmpl)) {
    for (const auto& e : kb.entries()) {
      by_line_.emplace(context_line(e).substr(2), e.entry_id);
    }
  }

  std::string complete(const std::string& prompt_text) const override {
    const auto view = parse_prompt(prompt_text, tmpl_);
    if (!view) return "{}";

    std::vector<std::size_t> context;
    for (const auto& line : view->context_lines) {
      auto it = by_line_.find(line);
      if (it != by_line_.end()) context.push_back(it->second);
    }
    const auto segs = split_at_cue(view->sentence);
    return render_pair_json(best_match(segs.improving, context),
                            best_match(segs.worsening, context));
  }

  std::string id() const override { return "mock/1"; }

 private:
  std::optional<std::string> best_match(std::string_view segment,
                                        const std::vector<std::size_t>& context) const {
    const TokenSet seg = content_token_set(segment);
    double best = 0.0;
    const KnowledgeEntry* winner = nullptr;
    for (std::size_t id : context) {
      const auto& e = kb_->entries()[id];
      TokenSet label;
      for (const auto& t : kb_->label_tokens(e.parameter_id)) {
        if (!is_function_word(t)) label.insert(t);
      }
      const double s = jaccard(seg, label);
      if (s > best || (s == best && s > 0.0 && winner != nullptr && id < winner->entry_id)) {
        best = s;
        winner = &e;
      }
    }
    if (winner == nullptr) return std::nullopt;
    return kb_->parameter_of(*winner).name;
  }

  const KnowledgeBase* kb_;
  PromptTemplate tmpl_;
  std::unordered_map<std::string, std::size_t> by_line_;
};

inline LlmResponse mock_llm(const StructuredPrompt& prompt, const KnowledgeBase& kb) {
  return invoke_llm(MockBackend(kb), prompt);
}

// Parameter names as emitted by the model, before canonicalization.
struct RawPair {
  std::optional<std::string> improving;
  std::optional<std::string> worsening;

  bool operator==(const RawPair&) const = default;
};

namespace detail {

// End of the balanced {...} starting at `open`, honoring JSON strings.
inline std::optional<std::size_t> balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Finds the first balanced JSON object in free text (prose and code fences
// around it are ignored) and reads the two parameter slots from it. Each slot
// may be a string or null, and a missing key reads as null. Returns nullopt
// when there is no object, both keys are missing, or a slot has another type.
inline std::optional<RawPair> parse_response(std::string_view raw) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos;
       open = raw.find('{', open + 1)) {
    const auto close = detail::balanced_end(raw, open);
    if (!close) continue;
    auto j = nlohmann::json::parse(raw.substr(open, *close - open + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;

    const bool has_imp = j.contains(kImprovingKey);
    const bool has_wor = j.contains(kWorseningKey);
    if (!has_imp && !has_wor) return std::nullopt;
    RawPair out;
    for (auto [key, slot] : {std::pair{kImprovingKey, &out.improving},
                             std::pair{kWorseningKey, &out.worsening}}) {
      const auto it = j.find(key);
      if (it == j.end() || it->is_null()) continue;
      if (!it->is_string()) return std::nullopt;
      *slot = it->get<std::string>();
    }
    return out;
  }
  return std::nullopt;
}

inline constexpr double kCanonicalJaccardThreshold = 0.5;

// Maps a free-text parameter name onto a parameter id: exact
// case-insensitive name, then exact synonym, then the best token Jaccard
// against name + synonyms if it reaches 0.5 (ties: lowest id).
inline std::optional<int> canonicalize(std::string_view raw_name, const KnowledgeBase& kb) {
  const auto trimmed = trim(raw_name);
  if (trimmed.empty()) return std::nullopt;
  const std::string folded = to_lower(trimmed);
  for (const auto& p : kb.parameters()) {
    if (to_lower(p.name) == folded) return p.id;
  }
  for (const auto& p : kb.parameters()) {
    for (const auto& s : p.synonyms) {
      if (to_lower(s) == folded) return p.id;
    }
  }
  const TokenSet toks = token_set(trimmed);
  std::optional<int> best_id;
  double best = 0.0;
  for (const auto& p : kb.parameters()) {
    const double s = jaccard(toks, kb.label_tokens(p.id));
    if (s > best || (s == best && best_id && p.id < *best_id)) {
      best = s;
      best_id = p.id;
    }
  }
  if (best_id && best >= kCanonicalJaccardThreshold) return best_id;
  return std::nullopt;
}

// Canonical ids plus the raw names they came from. Null slots are
// abstentions.
struct ContradictionPair {
  std::optional<int> improving;
  std::optional<int> worsening;
  std::optional<std::string> improving_text;
  std::optional<std::string> worsening_text;

  bool operator==(const ContradictionPair&) const = default;
};

}  // namespace trizx

#endif  // TRIZX_LLM_HPP_
