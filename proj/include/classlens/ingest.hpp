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

#ifndef CLASSLENS_INGEST_HPP_
#define CLASSLENS_INGEST_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "classlens/json.hpp"
#include "classlens/util.hpp"

namespace classlens {

enum class AssessmentKind { kCheckIn, kExitTicket, kFormative };
enum class QuestionKind { kOpenEnded, kSingleChoice, kMultiSelect };

std::string_view to_string(AssessmentKind kind);
std::string_view to_string(QuestionKind kind);
AssessmentKind parse_assessment_kind(std::string_view s);
QuestionKind parse_question_kind(std::string_view s);

inline constexpr std::string_view kDefaultDelimiter = ";";

struct ManifestQuestion {
  std::string column_header;
  QuestionKind kind = QuestionKind::kOpenEnded;
  std::optional<std::vector<std::string>> options;
  std::optional<std::vector<std::string>> exemplars;
};

struct AssessmentManifest {
  std::string assessment_id;
  std::string title;
  AssessmentKind kind = AssessmentKind::kCheckIn;
  std::vector<ManifestQuestion> questions;
  // Empty column names fall back to the default header conventions.
  std::string student_column;
  std::string section_column;
  std::string timestamp_column;
  std::string delimiter = std::string(kDefaultDelimiter);

  // Throws kInvalidManifest when an invariant does not hold.
  void validate() const;
};

AssessmentManifest manifest_from_json(const Json& j);
Json manifest_to_json(const AssessmentManifest& m);

struct Question {
  std::string question_id;
  std::string text;
  QuestionKind kind = QuestionKind::kOpenEnded;
  std::optional<std::vector<std::string>> options;
  std::vector<std::string> exemplars;

  bool operator==(const Question&) const = default;
};

struct StudentResponse {
  // Empty until pseudonymize() runs.
  std::string student_pseudonym;
  // Raw identity from the export. Cleared by pseudonymize() and never
  // serialized.
  std::optional<std::string> student_name;
  std::string section;
  std::optional<Timestamp> submitted_at;
  std::map<std::string, std::string> answers;

  bool operator==(const StudentResponse&) const = default;
};

struct Assessment {
  std::string assessment_id;
  std::string title;
  AssessmentKind kind = AssessmentKind::kCheckIn;
  std::vector<Question> questions;
  std::vector<StudentResponse> responses;
  std::set<std::string> sections;
  Timestamp ingested_at{};
  std::string delimiter = std::string(kDefaultDelimiter);

  const Question* find_question(std::string_view question_id) const;
  bool pseudonymized() const;

  bool operator==(const Assessment&) const = default;
};

// Stable id for a question: content hash of its header text.
std::string question_id_for(std::string_view header);

// Options used when no manifest is supplied.
struct ParseOptions {
  std::string assessment_id;  // empty: derived from the content hash of the export
  std::string title = "Untitled assessment";
  AssessmentKind kind = AssessmentKind::kCheckIn;
  std::string delimiter = std::string(kDefaultDelimiter);
};

inline constexpr std::string_view kUnassignedSection = "Unassigned";

// RFC-4180 reader. Throws kMalformedCsv.
std::vector<std::vector<std::string>> read_csv(std::string_view raw);
std::string write_csv(const std::vector<std::vector<std::string>>& rows);

Assessment parse_export(std::string_view raw, const std::optional<AssessmentManifest>& manifest,
                        const ParseOptions& options = {});

QuestionKind infer_question_kind(std::string_view header, const std::vector<std::string>& answers,
                                 std::string_view delimiter = kDefaultDelimiter);

// Lenient parse of "YYYY-MM-DD HH:MM:SS" or "MM/DD/YYYY HH:MM[:SS]".
std::optional<Timestamp> parse_export_timestamp(std::string_view s);

std::string pseudonym_for(std::string_view salt, std::string_view name);
Assessment pseudonymize(Assessment assessment, std::string_view salt);

enum class IssueKind { kDuplicateRow, kUnknownQuestion, kOutOfOptions };
std::string_view to_string(IssueKind kind);

struct ValidationIssue {
  IssueKind kind;
  std::size_t row;  // index into Assessment::responses
  std::string question_id;
  std::string detail;

  bool operator==(const ValidationIssue&) const = default;
};

std::vector<ValidationIssue> validate_assessment(const Assessment& assessment);

Json to_json(const ValidationIssue& issue);

// Serialized form never contains student_name.
Json to_json(const Assessment& assessment);
Assessment assessment_from_json(const Json& j);
Json to_json(const Question& question);

// Re-export in default CSV conventions. Student column carries the raw name
// when present, otherwise the pseudonym.
std::string to_csv(const Assessment& assessment);

}  // namespace classlens

#endif  // CLASSLENS_INGEST_HPP_
