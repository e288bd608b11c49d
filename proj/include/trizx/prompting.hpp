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

#ifndef TRIZX_PROMPTING_HPP_
#define TRIZX_PROMPTING_HPP_

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trizx/error.hpp"
#include "trizx/knowledge_base.hpp"
#include "trizx/rerank.hpp"
#include "trizx/text.hpp"

namespace trizx {

inline constexpr std::string_view kImprovingKey = "Improving_Parameter";
inline constexpr std::string_view kWorseningKey = "Worsening_Parameter";
inline constexpr std::string_view kEmptyContextLine = "- (none)";

struct PromptTemplate {
  std::string instruction =
      "Instruction: Extract the improving and worsening TRIZ parameters from "
      "the following sentence. Use the retrieved context as reference and "
      "answer with parameter names taken from it.";
  std::string context_header = "Retrieved Context:";
  std::string sentence_header = "Target Sentence: ";
  std::string format_line =
      "Output Format: {\"Improving_Parameter\": \"<name>\", "
      "\"Worsening_Parameter\": \"<name>\"}";
  std::string version = "v1";
};

inline void validate_template(const PromptTemplate& t) {
  if (t.format_line.find(kImprovingKey) == std::string::npos ||
      t.format_line.find(kWorseningKey) == std::string::npos) {
    throw ConfigError("prompt template format line must name both " +
                      std::string(kImprovingKey) + " and " + std::string(kWorseningKey));
  }
  if (t.context_header.empty() || t.sentence_header.empty()) {
    throw ConfigError("prompt template headers must be non-empty");
  }
  for (const auto* s : {&t.instruction, &t.context_header, &t.sentence_header,
                        &t.format_line}) {
    if (s->find('\n') != std::string::npos) {
      throw ConfigError("prompt template fields must be single lines");
    }
  }
}

// Fields missing from the file keep their default values.
inline PromptTemplate template_from_json(const nlohmann::json& j) {
  PromptTemplate t;
  if (!j.is_object()) throw ConfigError("prompt template must be a JSON object");
  auto take = [&j](const char* key, std::string& field) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) {
      throw ConfigError(std::string("prompt template field '") + key + "' must be a string");
    }
    field = j[key].get<std::string>();
  };
  take("instruction", t.instruction);
  take("context_header", t.context_header);
  take("sentence_header", t.sentence_header);
  take("format_line", t.format_line);
  take("version", t.version);
  validate_template(t);
  return t;
}

inline PromptTemplate load_template(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open prompt template " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed prompt template " + path);
  return template_from_json(j);
}

struct StructuredPrompt {
  std::string text;
  std::string sentence;
  std::vector<std::size_t> context_entry_ids;
  std::string template_version;
};

// Backslash, double quote, CR and LF become two-character escapes so the
// target sentence always stays on one quoted line.
inline std::string escape_sentence(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape_sentence(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    const char n = s[++i];
    switch (n) {
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: out += n;
    }
  }
  return out;
}

inline std::string context_line(const KnowledgeEntry& e) {
  return "- " + replace_all(e.document, "\n", "; ");
}

// Instruction, context block, quoted target sentence, then the output-format
// line (omitted when with_format_line is false). LF-separated, no trailing
// newline.
inline StructuredPrompt build_prompt(std::string_view sentence,
                                     const RefinedContext& refined,
                                     const KnowledgeBase& kb,
                                     const PromptTemplate& tmpl = {},
                                     bool with_format_line = true) {
  if (trim(sentence).empty()) throw DataError("build_prompt: empty sentence");
  StructuredPrompt p;
  p.sentence = std::string(sentence);
  p.template_version = tmpl.version;

  std::string& t = p.text;
  t += tmpl.instruction;
  t += '\n';
  t += tmpl.context_header;
  if (refined.empty()) {
    t += '\n';
    t += kEmptyContextLine;
  }
  for (const auto& item : refined.items) {
    const auto* e = kb.find_entry(item.entry_id);
    if (e == nullptr) {
      throw DataError("build_prompt: unknown entry " + std::to_string(item.entry_id));
    }
    t += '\n';
    t += context_line(*e);
    p.context_entry_ids.push_back(item.entry_id);
  }
  t += '\n';
  t += tmpl.sentence_header;
  t += '"';
  t += escape_sentence(sentence);
  t += '"';
  if (with_format_line) {
    t += '\n';
    t += tmpl.format_line;
  }
  return p;
}

// Sentence and context lines recovered from prompt text.
struct PromptView {
  std::string sentence;
  std::vector<std::string> context_lines;  // without the leading "- "
};

// The target line is the last line of the form <header>"...". Context lines
// are the "- " lines between the first context header and that line.
inline std::optional<PromptView> parse_prompt(std::string_view text,
                                              const PromptTemplate& tmpl = {}) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(pos, end - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  const std::string prefix = tmpl.sentence_header + "\"";
  std::optional<std::size_t> target;
  for (std::size_t i = lines.size(); i-- > 0;) {
    const auto l = lines[i];
    if (l.size() >= prefix.size() + 1 && l.substr(0, prefix.size()) == prefix &&
        l.back() == '"') {
      target = i;
      break;
    }
  }
  if (!target) return std::nullopt;

  std::optional<std::size_t> header;
  for (std::size_t i = 0; i < *target; ++i) {
    if (lines[i] == tmpl.context_header) {
      header = i;
      break;
    }
  }
  if (!header) return std::nullopt;

  PromptView view;
  const auto quoted = lines[*target].substr(prefix.size());
  view.sentence = unescape_sentence(quoted.substr(0, quoted.size() - 1));
  for (std::size_t i = *header + 1; i < *target; ++i) {
    const auto l = lines[i];
    if (l == kEmptyContextLine) continue;
    if (l.size() >= 2 && l.substr(0, 2) == "- ") view.context_lines.emplace_back(l.substr(2));
  }
  return view;
}

}  // namespace trizx

#endif  // TRIZX_PROMPTING_HPP_
