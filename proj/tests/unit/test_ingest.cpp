// Copyright 2026 The ClassLens Authors.
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

#include <doctest.h>

#include <algorithm>
#include <map>
#include <tuple>

#include "classlens/error.hpp"
#include "classlens/ingest.hpp"
#include "test_support.hpp"

using namespace classlens;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected classlens::Error");
  return ErrorCode::kIoFailure;
}

AssessmentManifest sample_manifest() {
  return manifest_from_json(Json::parse(testing::sample_manifest()));
}

}  // namespace

TEST_SUITE("csv") {
  TEST_CASE("quoted fields, escaped quotes and embedded newlines") {
    auto rows = read_csv("a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",\"line1\nline2\"\r\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1] == std::vector<std::string>{"x, y", "say \"hi\"", "line1\nline2"});
  }

  TEST_CASE("byte order mark is stripped") {
    auto rows = read_csv("\xEF\xBB\xBFName,Q\nA,B\n");
    CHECK(rows[0][0] == "Name");
  }

  TEST_CASE("unterminated quote and invalid UTF-8 are malformed") {
    CHECK(code_of([] { read_csv("a,b\n\"open,1\n"); }) == ErrorCode::kMalformedCsv);
    CHECK(code_of([] { read_csv("a,b\n\xFF\xFE,1\n"); }) == ErrorCode::kMalformedCsv);
  }

  TEST_CASE("write_csv round-trips through read_csv") {
    std::vector<std::vector<std::string>> rows{{"h1", "h,2", "h\"3"}, {"", "multi\nline", "plain"}};
    CHECK(read_csv(write_csv(rows)) == rows);
  }
}

TEST_SUITE("parse_export") {
  TEST_CASE("default conventions: one open-ended question, two responses") {
    auto a = parse_export(
        "Timestamp,Name,Homeroom,Q1: What is runoff?\n"
        "2024-03-11 09:00:00,Ann Lee,6A,Water that flows over the ground\n"
        "03/11/2024 09:05,Ben Ortiz,6B,water running off concrete\n",
        std::nullopt);
    REQUIRE(a.questions.size() == 1);
    CHECK(a.questions[0].kind == QuestionKind::kOpenEnded);
    CHECK(a.questions[0].text == "Q1: What is runoff?");
    CHECK_FALSE(a.questions[0].options);
    CHECK(a.responses.size() == 2);
    CHECK(a.sections == std::set<std::string>{"6A", "6B"});
    REQUIRE(a.responses[1].submitted_at);
    CHECK(format_timestamp(*a.responses[1].submitted_at) == "2024-03-11T09:05:00Z");
    CHECK(a.assessment_id.rfind("a_", 0) == 0);
  }

  TEST_CASE("the sample check-in parses into three open-ended questions") {
    auto a = parse_export(testing::sample_csv(), sample_manifest());
    CHECK(a.kind == AssessmentKind::kCheckIn);
    REQUIRE(a.questions.size() == 3);
    for (const auto& q : a.questions) CHECK(q.kind == QuestionKind::kOpenEnded);
    CHECK(a.sections.size() == 3);
    CHECK(a.responses.size() == 100);
    CHECK(a.questions[1].exemplars.size() == 2);
  }

  TEST_CASE("the sample check-in without a manifest infers the same question kinds") {
    auto a = parse_export(testing::sample_csv(), std::nullopt);
    REQUIRE(a.questions.size() == 3);
    for (const auto& q : a.questions) CHECK(q.kind == QuestionKind::kOpenEnded);
  }

  TEST_CASE("header only is an EmptyExport") {
    CHECK(code_of([] { parse_export("Timestamp,Name,Homeroom,Q1\n", std::nullopt); }) ==
          ErrorCode::kEmptyExport);
    CHECK(code_of([] { parse_export("", std::nullopt); }) == ErrorCode::kEmptyExport);
    CHECK(code_of([] { parse_export("Name,Q1\n\n , \n", std::nullopt); }) == ErrorCode::kEmptyExport);
  }

  TEST_CASE("missing columns") {
    CHECK(code_of([] { parse_export("Timestamp,Homeroom,Q1\nx,6A,y\n", std::nullopt); }) ==
          ErrorCode::kMissingColumn);
    auto m = sample_manifest();
    m.questions[0].column_header = "What is evaporation?";
    CHECK(code_of([&] { parse_export(testing::sample_csv(), m); }) == ErrorCode::kMissingColumn);
    auto m2 = sample_manifest();
    m2.section_column = "Class period";
    CHECK(code_of([&] { parse_export(testing::sample_csv(), m2); }) == ErrorCode::kMissingColumn);
  }

  TEST_CASE("rows longer than the header and duplicate headers are malformed") {
    CHECK(code_of([] { parse_export("Name,Q1\nA,b,c\n", std::nullopt); }) == ErrorCode::kMalformedCsv);
    CHECK(code_of([] { parse_export("Name,Q1,Q1\nA,b,c\n", std::nullopt); }) ==
          ErrorCode::kMalformedCsv);
  }

  TEST_CASE("short rows are padded with empty answers") {
    auto a = parse_export("Name,Section,Q1,Q2\nAnn,1,x\n", std::nullopt);
    REQUIRE(a.questions.size() == 2);
    CHECK(a.responses[0].answers.at(a.questions[1].question_id) == "");
  }

  TEST_CASE("section column conventions") {
    auto a = parse_export("Email Address,Class Section,Q1\na@x.org,P2,hello\n", std::nullopt);
    CHECK(a.sections == std::set<std::string>{"P2"});
    CHECK(a.questions.size() == 1);
    auto b = parse_export("Name,Q1\nAnn,hello\n", std::nullopt);
    CHECK(b.sections == std::set<std::string>{std::string(kUnassignedSection)});
  }

  TEST_CASE("unparseable timestamps are recorded as absent") {
    auto a = parse_export("Timestamp,Name,Q1\nyesterday,Ann,x\n", std::nullopt);
    CHECK_FALSE(a.responses[0].submitted_at);
  }

  TEST_CASE("question ids are stable content hashes of the header") {
    CHECK(question_id_for("Q1: What is runoff?") == question_id_for("  Q1: What is runoff? "));
    CHECK(question_id_for("Q1") != question_id_for("Q2"));
    auto a = parse_export("Name,Q1: What is runoff?\nA,x\n", std::nullopt);
    auto b = parse_export("Name,Q1: What is runoff?\nB,y\nC,z\n", std::nullopt);
    CHECK(a.questions[0].question_id == b.questions[0].question_id);
  }

  TEST_CASE("manifest invariants") {
    auto m = sample_manifest();
    m.questions[1].column_header = m.questions[0].column_header;
    CHECK(code_of([&] { m.validate(); }) == ErrorCode::kInvalidManifest);
    auto m2 = sample_manifest();
    m2.questions[0].kind = QuestionKind::kSingleChoice;
    CHECK(code_of([&] { m2.validate(); }) == ErrorCode::kInvalidManifest);
    auto m3 = sample_manifest();
    m3.assessment_id.clear();
    CHECK(code_of([&] { m3.validate(); }) == ErrorCode::kInvalidManifest);
    CHECK(code_of([] { manifest_from_json(Json::parse(R"({"title":"x"})")); }) ==
          ErrorCode::kInvalidManifest);
  }

  TEST_CASE("manifest round-trips through JSON") {
    auto m = sample_manifest();
    auto back = manifest_from_json(manifest_to_json(m));
    CHECK(manifest_to_json(back) == manifest_to_json(m));
  }
}

TEST_SUITE("infer_question_kind") {
  TEST_CASE("single choice") {
    CHECK(infer_question_kind("Q", {"A", "B", "A", "A"}) == QuestionKind::kSingleChoice);
  }
  TEST_CASE("multi select") {
    CHECK(infer_question_kind("Q", {"A;B", "A", "B;C"}) == QuestionKind::kMultiSelect);
  }
  TEST_CASE("twenty distinct sentences are open-ended") {
    std::vector<std::string> answers;
    for (int i = 0; i < 20; ++i) answers.push_back("Sentence number " + std::to_string(i) + " about runoff.");
    CHECK(infer_question_kind("Q", answers) == QuestionKind::kOpenEnded);
  }
  TEST_CASE("all-empty column defaults to open-ended") {
    CHECK(infer_question_kind("Q", {"", "  ", ""}) == QuestionKind::kOpenEnded);
    CHECK(infer_question_kind("Q", {}) == QuestionKind::kOpenEnded);
  }
  TEST_CASE("a handful of unrepeated free-text answers stay open-ended") {
    CHECK(infer_question_kind("Q", {"Water that flows", "water running off concrete"}) ==
          QuestionKind::kOpenEnded);
  }
  TEST_CASE("coverage below ninety percent is open-ended") {
    std::vector<std::string> answers;
    for (int i = 0; i < 8; ++i) answers.push_back("A");
    for (int i = 0; i < 12; ++i) answers.push_back("free text " + std::to_string(i));
    CHECK(infer_question_kind("Q", answers) == QuestionKind::kOpenEnded);
  }
  TEST_CASE("inferred options keep first-appearance order") {
    auto a = parse_export("Name,Pick\nA,Grass\nB,Concrete\nC,Grass\nD,Concrete\nE,Sand\n", std::nullopt);
    REQUIRE(a.questions[0].kind == QuestionKind::kSingleChoice);
    CHECK(*a.questions[0].options == std::vector<std::string>{"Grass", "Concrete", "Sand"});
  }
}

TEST_SUITE("pseudonymize") {
  TEST_CASE("deterministic per salt, different across salts") {
    CHECK(pseudonym_for("s1", "Ann Lee") == pseudonym_for("s1", "Ann Lee"));
    CHECK(pseudonym_for("s1", "Ann Lee") == pseudonym_for("s1", "  ann lee "));
    CHECK(pseudonym_for("s1", "Ann Lee") != pseudonym_for("s2", "Ann Lee"));
    CHECK(pseudonym_for("s1", "Ann Lee") != "Ann Lee");
  }

  TEST_CASE("empty salt is MissingSalt") {
    CHECK(code_of([] { pseudonym_for("", "Ann"); }) == ErrorCode::kMissingSalt);
    auto a = parse_export("Name,Q1\nAnn,x\n", std::nullopt);
    CHECK(code_of([&] { pseudonymize(a, ""); }) == ErrorCode::kMissingSalt);
  }

  TEST_CASE("serialized output contains no raw names") {
    auto raw = parse_export(testing::sample_csv(), sample_manifest());
    std::set<std::string> names;
    for (const auto& r : raw.responses) names.insert(*r.student_name);
    auto a = pseudonymize(raw, "pepper");
    CHECK(a.pseudonymized());
    const std::string doc = to_json(a).dump();
    for (const auto& n : names) CHECK_MESSAGE(doc.find(n) == std::string::npos, n);
    CHECK(doc.find("student_name") == std::string::npos);
  }

  TEST_CASE("serializing an unpseudonymized assessment is refused") {
    auto a = parse_export("Name,Q1\nAnn,x\n", std::nullopt);
    CHECK(code_of([&] { to_json(a); }) == ErrorCode::kSchemaViolation);
  }

  TEST_CASE("no collisions among 10,000 distinct names") {
    std::set<std::string> tokens;
    for (int i = 0; i < 10000; ++i) tokens.insert(pseudonym_for("salt", "student " + std::to_string(i)));
    CHECK(tokens.size() == 10000);
  }
}

TEST_SUITE("validate_assessment") {
  TEST_CASE("clean two-row assessment has no issues") {
    auto a = pseudonymize(
        parse_export("Timestamp,Name,Q1\n2024-01-01 10:00:00,A,x\n2024-01-01 10:01:00,B,y\n", std::nullopt),
        "s");
    CHECK(validate_assessment(a).empty());
  }

  TEST_CASE("single-choice answer outside the options") {
    AssessmentManifest m;
    m.assessment_id = "t";
    m.questions.push_back({"Pick", QuestionKind::kSingleChoice, std::vector<std::string>{"A", "B"}, {}});
    auto a = parse_export("Name,Pick\nAnn,A\nBen,Z\n", m);
    auto issues = validate_assessment(a);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].kind == IssueKind::kOutOfOptions);
    CHECK(issues[0].row == 1);
  }

  TEST_CASE("duplicated row") {
    auto a = parse_export(
        "Timestamp,Name,Q1\n2024-01-01 10:00:00,A,x\n2024-01-01 10:00:00,A,x\n", std::nullopt);
    auto issues = validate_assessment(pseudonymize(a, "s"));
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].kind == IssueKind::kDuplicateRow);
    CHECK(issues[0].row == 1);
  }

  TEST_CASE("answer to an unknown question") {
    auto a = parse_export("Name,Q1\nA,x\n", std::nullopt);
    a.responses[0].answers["q_000000000000"] = "stray";
    auto issues = validate_assessment(a);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].kind == IssueKind::kUnknownQuestion);
  }

  TEST_CASE("flagged rows are retained") {
    auto a = parse_export(testing::sample_csv(), sample_manifest());
    auto issues = validate_assessment(pseudonymize(a, "s"));
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].kind == IssueKind::kDuplicateRow);
    CHECK(a.responses.size() == 100);
  }
}

TEST_SUITE("round trip") {
  TEST_CASE("JSON serialization round-trips the pseudonymized sample") {
    auto a = pseudonymize(parse_export(testing::sample_csv(), sample_manifest()), "salt");
    auto back = assessment_from_json(to_json(a));
    CHECK(back == a);
    CHECK(to_json(back).dump() == to_json(a).dump());
  }

  TEST_CASE("re-ingesting the CSV re-export yields a structurally equal assessment") {
    auto a = parse_export(testing::sample_csv(), sample_manifest());
    auto again = parse_export(to_csv(a), sample_manifest());
    again.ingested_at = a.ingested_at;
    CHECK(again == a);
  }

  TEST_CASE("unsupported schema versions are rejected") {
    auto j = to_json(pseudonymize(parse_export("Name,Q1\nA,x\n", std::nullopt), "s"));
    j["schema_version"] = "2";
    CHECK(code_of([&] { assessment_from_json(j); }) == ErrorCode::kSchemaViolation);
  }
}

TEST_CASE("triples match a naive row scan of the sample export") {
  auto a = parse_export(testing::sample_csv(), sample_manifest());
  using Triple = std::tuple<std::string, std::string, std::string>;
  std::multiset<Triple> got;
  for (const auto& r : a.responses) {
    for (const auto& [qid, ans] : r.answers) got.insert({r.section, qid, ans});
  }
  auto rows = testing::naive_csv(testing::sample_csv());
  const auto& header = rows[0];
  std::multiset<Triple> want;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (std::size_t c = 3; c < header.size(); ++c) {
      want.insert({rows[i][2], question_id_for(header[c]), rows[i][c]});
    }
  }
  CHECK(got == want);
}
