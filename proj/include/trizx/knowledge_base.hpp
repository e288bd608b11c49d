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

#ifndef TRIZX_KNOWLEDGE_BASE_HPP_
#define TRIZX_KNOWLEDGE_BASE_HPP_

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "trizx/error.hpp"
#include "trizx/text.hpp"

namespace trizx {

inline constexpr int kCanonicalParameterCount = 39;

// One of the standard engineering parameters.
struct TrizParameter {
  int id = 0;
  std::string name;
  std::string definition;
  std::vector<std::string> synonyms;
  std::vector<std::string> examples;

  bool operator==(const TrizParameter&) const = default;
};

// Retrievable text document for a parameter. Several entries may share a
// parameter_id when annotated examples are ingested alongside the base list.
struct KnowledgeEntry {
  std::size_t entry_id = 0;
  int parameter_id = 0;
  std::string document;

  bool operator==(const KnowledgeEntry&) const = default;
};

// name + "\n" + definition + "\nSynonyms: " + a, b + "\nExamples: " + x | y
inline std::string compose_document(const TrizParameter& p) {
  std::string doc;
  doc.append(p.name);
  doc.append("\n");
  doc.append(p.definition);
  doc.append("\nSynonyms: ");
  doc.append(join(p.synonyms, ", "));
  doc.append("\nExamples: ");
  doc.append(join(p.examples, " | "));
  return doc;
}

inline KnowledgeEntry compose_entry(const TrizParameter& p,
                                    std::size_t entry_id = 0) {
  return KnowledgeEntry{entry_id, p.id, compose_document(p)};
}

enum class ViolationKind {
  kDuplicateId,
  kIdOutOfRange,
  kEmptyName,
  kDuplicateName,
  kDuplicateSynonym,
  kNameInSynonyms,
  kMissingEntry,
  kDanglingReference,
  kNonDenseEntryIds,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kDuplicateId: return "duplicate_id";
    case ViolationKind::kIdOutOfRange: return "id_out_of_range";
    case ViolationKind::kEmptyName: return "empty_name";
    case ViolationKind::kDuplicateName: return "duplicate_name";
    case ViolationKind::kDuplicateSynonym: return "duplicate_synonym";
    case ViolationKind::kNameInSynonyms: return "name_in_synonyms";
    case ViolationKind::kMissingEntry: return "missing_entry";
    case ViolationKind::kDanglingReference: return "dangling_reference";
    case ViolationKind::kNonDenseEntryIds: return "non_dense_entry_ids";
  }
  return "unknown";
}

// Immutable after construction; safe to share across threads.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  // Takes parameters and entries as given. Call validate_kb() to check them.
  KnowledgeBase(std::vector<TrizParameter> parameters,
                std::vector<KnowledgeEntry> entries)
      : parameters_(std::move(parameters)), entries_(std::move(entries)) {
    index();
  }

  // One composed entry per parameter, parameters sorted by id, entry ids dense.
  static KnowledgeBase from_parameters(std::vector<TrizParameter> parameters) {
    std::stable_sort(parameters.begin(), parameters.end(),
                     [](const auto& a, const auto& b) { return a.id < b.id; });
    std::vector<KnowledgeEntry> entries;
    entries.reserve(parameters.size());
    for (const auto& p : parameters) {
      entries.push_back(compose_entry(p, entries.size()));
    }
    return KnowledgeBase(std::move(parameters), std::move(entries));
  }

  // Returns a copy with extra documents appended as entries of existing
  // parameters (e.g. annotated example sentences).
  KnowledgeBase with_extra_entries(
      const std::vector<std::pair<int, std::string>>& docs) const {
    auto entries = entries_;
    for (const auto& [pid, doc] : docs) {
      entries.push_back(KnowledgeEntry{entries.size(), pid, doc});
    }
    return KnowledgeBase(parameters_, std::move(entries));
  }

  const std::vector<TrizParameter>& parameters() const { return parameters_; }
  const std::vector<KnowledgeEntry>& entries() const { return entries_; }
  std::size_t entry_count() const { return entries_.size(); }

  const TrizParameter* find_parameter(int id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &parameters_[it->second];
  }

  const KnowledgeEntry* find_entry(std::size_t entry_id) const {
    return entry_id < entries_.size() &&
                   entries_[entry_id].entry_id == entry_id
               ? &entries_[entry_id]
               : nullptr;
  }

  const TrizParameter& parameter_of(const KnowledgeEntry& e) const {
    const auto* p = find_parameter(e.parameter_id);
    if (p == nullptr) {
      throw DataError("entry " + std::to_string(e.entry_id) +
                      " references unknown parameter " +
                      std::to_string(e.parameter_id));
    }
    return *p;
  }

  // Tokens of a parameter's name and all of its synonyms.
  const TokenSet& label_tokens(int parameter_id) const {
    static const TokenSet kEmpty;
    auto it = label_tokens_.find(parameter_id);
    return it == label_tokens_.end() ? kEmpty : it->second;
  }

  // Stable across processes; changes whenever any parameter or entry does.
  std::string content_hash() const { return hash_; }

 private:
  void index() {
    for (std::size_t i = 0; i < parameters_.size(); ++i) {
      const auto& p = parameters_[i];
      by_id_.emplace(p.id, i);
      TokenSet toks = token_set(p.name);
      for (const auto& s : p.synonyms) {
        auto more = token_set(s);
        toks.insert(more.begin(), more.end());
      }
      label_tokens_.emplace(p.id, std::move(toks));
    }
    std::string blob;
    for (const auto& p : parameters_) {
      nlohmann::json j = {{"id", p.id},
                          {"name", p.name},
                          {"definition", p.definition},
                          {"synonyms", p.synonyms},
                          {"examples", p.examples}};
      blob += j.dump();
      blob += '\n';
    }
    for (const auto& e : entries_) {
      blob += std::to_string(e.entry_id) + ":" + std::to_string(e.parameter_id);
      blob += '\x1f';
      blob += e.document;
      blob += '\x1e';
    }
    hash_ = hex64(fnv1a64(blob));
  }

  std::vector<TrizParameter> parameters_;
  std::vector<KnowledgeEntry> entries_;
  std::unordered_map<int, std::size_t> by_id_;
  std::unordered_map<int, TokenSet> label_tokens_;
  std::string hash_ = hex64(fnv1a64(""));
};

// Checks every parameter/entry invariant. An empty result means valid.
inline std::vector<Violation> validate_kb(const KnowledgeBase& kb) {
  std::vector<Violation> out;
  auto add = [&out](ViolationKind k, std::string msg) {
    out.push_back(Violation{k, std::move(msg)});
  };

  std::map<int, int> id_counts;
  std::set<std::string> names;
  for (const auto& p : kb.parameters()) {
    const std::string tag = "parameter " + std::to_string(p.id);
    if (++id_counts[p.id] == 2) add(ViolationKind::kDuplicateId, tag + " defined more than once");
    if (p.id < 1 || p.id > kCanonicalParameterCount) {
      add(ViolationKind::kIdOutOfRange, tag + " outside [1,39]");
    }
    if (trim(p.name).empty()) {
      add(ViolationKind::kEmptyName, tag + " has an empty name");
    } else if (!names.insert(to_lower(p.name)).second) {
      add(ViolationKind::kDuplicateName, tag + " repeats name '" + p.name + "'");
    }
    std::set<std::string> seen;
    const std::string folded_name = to_lower(p.name);
    for (const auto& s : p.synonyms) {
      const std::string folded = to_lower(s);
      if (folded == folded_name) {
        add(ViolationKind::kNameInSynonyms, tag + " lists its own name as a synonym");
      }
      if (!seen.insert(folded).second) {
        add(ViolationKind::kDuplicateSynonym, tag + " repeats synonym '" + s + "'");
      }
    }
  }

  std::set<int> covered;
  for (std::size_t i = 0; i < kb.entries().size(); ++i) {
    const auto& e = kb.entries()[i];
    if (e.entry_id != i) {
      add(ViolationKind::kNonDenseEntryIds,
          "entry at position " + std::to_string(i) + " has id " +
              std::to_string(e.entry_id));
    }
    if (kb.find_parameter(e.parameter_id) == nullptr) {
      add(ViolationKind::kDanglingReference,
          "entry " + std::to_string(e.entry_id) + " references parameter " +
              std::to_string(e.parameter_id));
    } else {
      covered.insert(e.parameter_id);
    }
  }
  for (const auto& p : kb.parameters()) {
    if (!covered.count(p.id)) {
      add(ViolationKind::kMissingEntry,
          "parameter " + std::to_string(p.id) + " has no entry");
    }
  }
  return out;
}

namespace detail {

inline std::vector<std::string> string_array(const nlohmann::json& j,
                                             const char* key,
                                             std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw LoadError(std::string("missing field '") + key + "'", line);
  if (!it->is_array()) throw LoadError(std::string("field '") + key + "' must be an array", line);
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw LoadError(std::string("field '") + key + "' must hold strings", line);
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline std::string string_field(const nlohmann::json& j, const char* key,
                                std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw LoadError(std::string("missing field '") + key + "'", line);
  if (!it->is_string()) throw LoadError(std::string("field '") + key + "' must be a string", line);
  return it->get<std::string>();
}

}  // namespace detail

// Reads line-delimited parameter records. Blank lines are skipped.
// Warnings (non-canonical parameter count) are appended to `warnings`.
inline KnowledgeBase parse_parameters(std::istream& in,
                                      std::vector<std::string>* warnings = nullptr) {
  std::vector<TrizParameter> params;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw LoadError("not a JSON object", lineno);
    }
    TrizParameter p;
    const auto id = j.find("id");
    if (id == j.end()) throw LoadError("missing field 'id'", lineno);
    if (!id->is_number_integer()) throw LoadError("field 'id' must be an integer", lineno);
    p.id = id->get<int>();
    p.name = detail::string_field(j, "name", lineno);
    p.definition = detail::string_field(j, "definition", lineno);
    p.synonyms = detail::string_array(j, "synonyms", lineno);
    p.examples = detail::string_array(j, "examples", lineno);
    params.push_back(std::move(p));
  }
  if (params.empty()) throw LoadError("no parameters", 0);

  auto kb = KnowledgeBase::from_parameters(std::move(params));
  const auto violations = validate_kb(kb);
  if (!violations.empty()) {
    std::string msg;
    for (const auto& v : violations) {
      if (!msg.empty()) msg += "; ";
      msg += v.message;
    }
    throw IntegrityError(msg);
  }
  if (warnings != nullptr && kb.parameters().size() != kCanonicalParameterCount) {
    warnings->push_back("expected " + std::to_string(kCanonicalParameterCount) +
                        " parameters, loaded " +
                        std::to_string(kb.parameters().size()));
  }
  return kb;
}

inline KnowledgeBase load_parameters(const std::string& path,
                                     std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path, 0);
  return parse_parameters(in, warnings);
}

inline void serialize_parameters(const KnowledgeBase& kb, std::ostream& out) {
  for (const auto& p : kb.parameters()) {
    nlohmann::json j = {{"id", p.id},
                        {"name", p.name},
                        {"definition", p.definition},
                        {"synonyms", p.synonyms},
                        {"examples", p.examples}};
    out << j.dump() << '\n';
  }
}

}  // namespace trizx

#endif  // TRIZX_KNOWLEDGE_BASE_HPP_
