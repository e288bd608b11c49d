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

#include "trizx/knowledge_base.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"
#include "trizx/evaluation.hpp"

namespace trizx {
namespace {

using testing::fixture_kb;

// The standard 39 engineering parameters, in order.
const char* const kCanonicalNames[] = {
    "Weight of moving object",
    "Weight of stationary object",
    "Length of moving object",
    "Length of stationary object",
    "Area of moving object",
    "Area of stationary object",
    "Volume of moving object",
    "Volume of stationary object",
    "Speed",
    "Force",
    "Stress or pressure",
    "Shape",
    "Stability of the object's composition",
    "Strength",
    "Duration of action of moving object",
    "Duration of action by stationary object",
    "Temperature",
    "Illumination intensity",
    "Use of energy by moving object",
    "Use of energy by stationary object",
    "Power",
    "Loss of energy",
    "Loss of substance",
    "Loss of information",
    "Loss of time",
    "Quantity of substance",
    "Reliability",
    "Measurement accuracy",
    "Manufacturing precision",
    "Object-affected harmful factors",
    "Object-generated harmful factors",
    "Ease of manufacture",
    "Ease of operation",
    "Ease of repair",
    "Adaptability or versatility",
    "Device complexity",
    "Difficulty of detecting and measuring",
    "Extent of automation",
    "Productivity",
};

TrizParameter make_param(int id, std::string name) {
  TrizParameter p;
  p.id = id;
  p.name = std::move(name);
  p.definition = "def " + std::to_string(id);
  return p;
}

bool has_kind(const std::vector<Violation>& vs, ViolationKind k) {
  return std::any_of(vs.begin(), vs.end(), [k](const Violation& v) { return v.kind == k; });
}

TEST(Fixture, HasThirtyNineCanonicalParameters) {
  const auto& kb = fixture_kb();
  ASSERT_EQ(kb.parameters().size(), 39u);
  for (int id = 1; id <= 39; ++id) {
    const auto* p = kb.find_parameter(id);
    ASSERT_NE(p, nullptr) << id;
    EXPECT_EQ(p->name, kCanonicalNames[id - 1]);
    EXPECT_FALSE(p->definition.empty());
  }
  EXPECT_EQ(kb.find_parameter(9)->name, "Speed");
  EXPECT_EQ(kb.entry_count(), 39u);
  EXPECT_TRUE(validate_kb(kb).empty());
}

TEST(Fixture, NoSynonymContainsAnyParameterName) {
  const auto& kb = fixture_kb();
  for (const auto& p : kb.parameters()) {
    for (const auto& s : p.synonyms) {
      for (const auto& q : kb.parameters()) {
        EXPECT_FALSE(contains_ci(s, q.name)) << s << " contains " << q.name;
      }
    }
  }
}

TEST(Fixture, FrameWordsAreDisjointFromLabels) {
  const auto& kb = fixture_kb();
  TokenSet frame_words;
  for (auto frame : kSyntheticFrames) {
    std::string text(frame);
    for (auto slot : {"{A}", "{B}", "{CUE}"}) text = replace_all(text, slot, " ");
    for (auto& t : tokenize(text)) frame_words.insert(t);
  }
  for (auto cue : kAdversativeCues) {
    for (auto& t : tokenize(cue)) frame_words.insert(t);
  }
  for (const auto& p : kb.parameters()) {
    EXPECT_EQ(intersection_size(frame_words, content_token_set(p.name)), 0u) << p.name;
  }
}

TEST(ComposeEntry, FixedFieldOrder) {
  TrizParameter p = make_param(9, "Speed");
  p.definition = "The velocity of an object...";
  p.synonyms = {"velocity", "rate"};
  p.examples = {"x goes fast", "y goes faster"};
  const auto e = compose_entry(p, 4);
  EXPECT_EQ(e.entry_id, 4u);
  EXPECT_EQ(e.parameter_id, 9);
  EXPECT_EQ(e.document,
            "Speed\nThe velocity of an object...\nSynonyms: velocity, rate\n"
            "Examples: x goes fast | y goes faster");
  EXPECT_NE(e.document.find("Synonyms: velocity, rate"), std::string::npos);
  EXPECT_EQ(compose_entry(p, 4), e);
}

TEST(ComposeEntry, EmptyListsLeaveEmptySections) {
  const auto p = make_param(3, "Length");
  EXPECT_EQ(compose_entry(p).document, "Length\ndef 3\nSynonyms: \nExamples: ");
}

TEST(ValidateKb, ReportsDuplicateId) {
  KnowledgeBase kb({make_param(5, "A"), make_param(5, "B")},
                   {KnowledgeEntry{0, 5, "a"}, KnowledgeEntry{1, 5, "b"}});
  const auto vs = validate_kb(kb);
  EXPECT_EQ(std::count_if(vs.begin(), vs.end(),
                          [](const Violation& v) { return v.kind == ViolationKind::kDuplicateId; }),
            1);
}

TEST(ValidateKb, ReportsDanglingReference) {
  KnowledgeBase kb({make_param(1, "A")}, {KnowledgeEntry{0, 1, "a"}, KnowledgeEntry{1, 40, "x"}});
  EXPECT_TRUE(has_kind(validate_kb(kb), ViolationKind::kDanglingReference));
}

TEST(ValidateKb, ReportsOtherViolations) {
  auto a = make_param(1, "Alpha");
  a.synonyms = {"alpha", "beta", "Beta"};
  auto b = make_param(41, "ALPHA");
  KnowledgeBase kb({a, b}, {KnowledgeEntry{3, 1, "a"}});
  const auto vs = validate_kb(kb);
  EXPECT_TRUE(has_kind(vs, ViolationKind::kNameInSynonyms));
  EXPECT_TRUE(has_kind(vs, ViolationKind::kDuplicateSynonym));
  EXPECT_TRUE(has_kind(vs, ViolationKind::kIdOutOfRange));
  EXPECT_TRUE(has_kind(vs, ViolationKind::kDuplicateName));
  EXPECT_TRUE(has_kind(vs, ViolationKind::kMissingEntry));
  EXPECT_TRUE(has_kind(vs, ViolationKind::kNonDenseEntryIds));
}

TEST(ParseParameters, EmptyInputFails) {
  std::istringstream in("\n\n");
  try {
    parse_parameters(in);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_STREQ(e.what(), "no parameters");
  }
}

TEST(ParseParameters, MissingFieldNamesLine) {
  std::istringstream in(
      R"({"id": 1, "name": "A", "definition": "d", "synonyms": [], "examples": []})"
      "\n"
      R"({"id": 2, "definition": "d", "synonyms": [], "examples": []})"
      "\n");
  try {
    parse_parameters(in);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("name"), std::string::npos);
  }
}

TEST(ParseParameters, DuplicateIdIsIntegrityError) {
  std::istringstream in(
      R"({"id": 1, "name": "A", "definition": "d", "synonyms": [], "examples": []})"
      "\n"
      R"({"id": 1, "name": "B", "definition": "d", "synonyms": [], "examples": []})");
  EXPECT_THROW(parse_parameters(in), IntegrityError);
}

TEST(ParseParameters, SmallBaseWarns) {
  std::istringstream in(
      R"({"id": 1, "name": "A", "definition": "d", "synonyms": ["x"], "examples": []})");
  std::vector<std::string> warnings;
  const auto kb = parse_parameters(in, &warnings);
  EXPECT_EQ(kb.parameters().size(), 1u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("39"), std::string::npos);
}

TEST(ParseParameters, NonStringSynonymRejected) {
  std::istringstream in(
      R"({"id": 1, "name": "A", "definition": "d", "synonyms": [3], "examples": []})");
  EXPECT_THROW(parse_parameters(in), LoadError);
}

TEST(LoadParameters, FixtureLoadsWithoutWarnings) {
  std::vector<std::string> warnings;
  const auto kb = load_parameters(TRIZX_TEST_KB, &warnings);
  EXPECT_TRUE(warnings.empty());
  EXPECT_EQ(kb.parameters().size(), 39u);
}

TEST(SerializeParameters, RoundTrips) {
  std::ostringstream out;
  serialize_parameters(fixture_kb(), out);
  std::istringstream in(out.str());
  const auto again = parse_parameters(in);
  EXPECT_EQ(again.parameters(), fixture_kb().parameters());
  EXPECT_EQ(again.entries(), fixture_kb().entries());
  EXPECT_EQ(again.content_hash(), fixture_kb().content_hash());
}

TEST(ContentHash, ChangesWithContent) {
  auto params = fixture_kb().parameters();
  params[0].definition += ".";
  const auto kb = KnowledgeBase::from_parameters(params);
  EXPECT_NE(kb.content_hash(), fixture_kb().content_hash());
  EXPECT_EQ(fixture_kb().content_hash().size(), 16u);
}

TEST(ExtraEntries, ShareParameterIds) {
  const auto kb = fixture_kb().with_extra_entries({{9, "The belt moves faster."}});
  EXPECT_EQ(kb.entry_count(), 40u);
  EXPECT_EQ(kb.entries().back().entry_id, 39u);
  EXPECT_EQ(kb.parameter_of(kb.entries().back()).name, "Speed");
  EXPECT_TRUE(validate_kb(kb).empty());
}

TEST(LabelTokens, UnionOfNameAndSynonyms) {
  EXPECT_EQ(fixture_kb().label_tokens(9), (TokenSet{"speed", "velocity", "rate"}));
  EXPECT_TRUE(fixture_kb().label_tokens(99).empty());
}

}  // namespace
}  // namespace trizx
