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

#include "classlens/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include "classlens/error.hpp"

namespace classlens {

std::string_view to_string(AssessmentKind kind) {
  switch (kind) {
    case AssessmentKind::kCheckIn: return "check_in";
    case AssessmentKind::kExitTicket: return "exit_ticket";
    case AssessmentKind::kFormative: return "formative";
  }
  return "check_in";
}

std::string_view to_string(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::kOpenEnded: return "open_ended";
    case QuestionKind::kSingleChoice: return "single_choice";
    case QuestionKind::kMultiSelect: return "multi_select";
  }
  return "open_ended";
}

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::kDuplicateRow: return "DuplicateRow";
    case IssueKind::kUnknownQuestion: return "UnknownQuestion";
    case IssueKind::kOutOfOptions: return "OutOfOptions";
  }
  return "Unknown";
}

AssessmentKind parse_assessment_kind(std::string_view s) {
  if (s == "check_in") return AssessmentKind::kCheckIn;
  if (s == "exit_ticket") return AssessmentKind::kExitTicket;
  if (s == "formative") return AssessmentKind::kFormative;
  throw Error(ErrorCode::kInvalidManifest, "unknown assessment kind '" + std::string(s) + "'");
}

QuestionKind parse_question_kind(std::string_view s) {
  if (s == "open_ended") return QuestionKind::kOpenEnded;
  if (s == "single_choice") return QuestionKind::kSingleChoice;
  if (s == "multi_select") return QuestionKind::kMultiSelect;
  throw Error(ErrorCode::kInvalidManifest, "unknown question kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Manifest

void AssessmentManifest::validate() const {
  if (assessment_id.empty()) {
    throw Error(ErrorCode::kInvalidManifest, "manifest assessment_id is empty");
  }
  if (delimiter.empty()) {
    throw Error(ErrorCode::kInvalidManifest, "manifest delimiter is empty");
  }
  std::set<std::string> seen;
  for (const auto& q : questions) {
    if (!seen.insert(q.column_header).second) {
      throw Error(ErrorCode::kInvalidManifest,
                  "duplicate question column '" + q.column_header + "'");
    }
    if (q.kind != QuestionKind::kOpenEnded && (!q.options || q.options->empty())) {
      throw Error(ErrorCode::kInvalidManifest,
                  "choice question '" + q.column_header + "' declares no options");
    }
  }
}

namespace {

std::optional<std::vector<std::string>> optional_strings(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

AssessmentManifest manifest_from_json(const Json& j) {
  AssessmentManifest m;
  try {
    m.assessment_id = j.at("assessment_id").get<std::string>();
    m.title = j.value("title", m.assessment_id);
    m.kind = parse_assessment_kind(j.value("kind", std::string("check_in")));
    m.student_column = j.value("student_column", std::string());
    m.section_column = j.value("section_column", std::string());
    m.timestamp_column = j.value("timestamp_column", std::string());
    m.delimiter = j.value("delimiter", std::string(kDefaultDelimiter));
    for (const auto& jq : j.at("questions")) {
      ManifestQuestion q;
      q.column_header = jq.at("column_header").get<std::string>();
      q.kind = parse_question_kind(jq.value("kind", std::string("open_ended")));
      q.options = optional_strings(jq, "options");
      q.exemplars = optional_strings(jq, "exemplars");
      m.questions.push_back(std::move(q));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidManifest, std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

Json manifest_to_json(const AssessmentManifest& m) {
  Json j;
  j["assessment_id"] = m.assessment_id;
  j["title"] = m.title;
  j["kind"] = to_string(m.kind);
  j["student_column"] = m.student_column;
  j["section_column"] = m.section_column;
  j["timestamp_column"] = m.timestamp_column;
  j["delimiter"] = m.delimiter;
  Json qs = Json::array();
  for (const auto& q : m.questions) {
    Json jq;
    jq["column_header"] = q.column_header;
    jq["kind"] = to_string(q.kind);
    if (q.options) jq["options"] = *q.options;
    if (q.exemplars) jq["exemplars"] = *q.exemplars;
    qs.push_back(std::move(jq));
  }
  j["questions"] = std::move(qs);
  return j;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 0;
    if (len == 0 || i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) return false;
    }
    i += len;
  }
  return true;
}

}  // namespace

std::vector<std::vector<std::string>> read_csv(std::string_view raw) {
  if (raw.starts_with("\xEF\xBB\xBF")) raw.remove_prefix(3);
  if (!valid_utf8(raw)) throw Error(ErrorCode::kMalformedCsv, "export is not valid UTF-8");

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  std::size_t line = 1;
  std::size_t i = 0;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  while (i < raw.size()) {
    char c = raw[i];
    if (c == '"' && !field_started) {
      // Quoted field.
      ++i;
      bool closed = false;
      while (i < raw.size()) {
        if (raw[i] == '"') {
          if (i + 1 < raw.size() && raw[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        if (raw[i] == '\n') ++line;
        field.push_back(raw[i++]);
      }
      if (!closed) {
        throw Error(ErrorCode::kMalformedCsv,
                    "unterminated quoted field starting before line " + std::to_string(line));
      }
      field_started = true;
      if (i < raw.size() && raw[i] != ',' && raw[i] != '\n' && raw[i] != '\r') {
        throw Error(ErrorCode::kMalformedCsv,
                    "unexpected character after closing quote on line " + std::to_string(line));
      }
      continue;
    }
    if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_row();
      if (c == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
      ++i;
      ++line;
    } else if (c == '"') {
      throw Error(ErrorCode::kMalformedCsv, "stray quote on line " + std::to_string(line));
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string write_csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out.push_back(',');
      const auto& f = row[i];
      bool quote = f.find_first_of(",\"\r\n") != std::string::npos;
      if (!quote) {
        out += f;
        continue;
      }
      out.push_back('"');
      for (char c : f) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    }
    out += "\r\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

std::string question_id_for(std::string_view header) {
  return "q_" + sha256_hex(trim(header)).substr(0, 12);
}

std::optional<Timestamp> parse_export_timestamp(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int consumed = 0;
  bool matched = false;
  if (std::sscanf(t.c_str(), "%4d-%2u-%2u %2u:%2u:%2u%n", &y, &mo, &d, &h, &mi, &sec,
                  &consumed) == 6 &&
      static_cast<std::size_t>(consumed) == t.size()) {
    matched = true;
  } else {
    sec = 0;
    consumed = 0;
    int n = std::sscanf(t.c_str(), "%2u/%2u/%4d %2u:%2u%n", &mo, &d, &y, &h, &mi, &consumed);
    if (n == 5) {
      if (static_cast<std::size_t>(consumed) == t.size()) {
        matched = true;
      } else {
        int more = 0;
        if (std::sscanf(t.c_str() + consumed, ":%2u%n", &sec, &more) == 1 &&
            static_cast<std::size_t>(consumed + more) == t.size()) {
          matched = true;
        }
      }
    }
  }
  if (!matched) return std::nullopt;
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

namespace {

struct ValueCount {
  std::string first_spelling;
  std::size_t count = 0;
  std::size_t first_seen = 0;
};

// Counts lowercase-trimmed values and returns the top `limit` by frequency
// (ties by first appearance).
struct ValueTable {
  std::unordered_map<std::string, ValueCount> counts;
  std::size_t total = 0;

  void add(std::string_view raw_value) {
    std::string spelled = trim(raw_value);
    if (spelled.empty()) return;
    std::string key = to_lower(spelled);
    auto [it, inserted] = counts.try_emplace(key);
    if (inserted) {
      it->second.first_spelling = spelled;
      it->second.first_seen = counts.size();
    }
    ++it->second.count;
    ++total;
  }

  std::vector<std::pair<std::string, ValueCount>> top(std::size_t limit) const {
    std::vector<std::pair<std::string, ValueCount>> all(counts.begin(), counts.end());
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (a.second.count != b.second.count) return a.second.count > b.second.count;
      return a.second.first_seen < b.second.first_seen;
    });
    if (all.size() > limit) all.resize(limit);
    return all;
  }
};

constexpr std::size_t kMaxChoiceValues = 10;
constexpr double kChoiceCoverage = 0.9;

std::vector<std::string> split_parts(std::string_view answer, std::string_view delimiter) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = answer.find(delimiter, start);
    std::string part = trim(answer.substr(start, pos == std::string_view::npos ? answer.npos : pos - start));
    if (!part.empty()) parts.push_back(std::move(part));
    if (pos == std::string_view::npos) break;
    start = pos + delimiter.size();
  }
  return parts;
}

// Options in first-appearance order among the top values.
std::vector<std::string> infer_options(const std::vector<std::string>& answers, QuestionKind kind,
                                       std::string_view delimiter) {
  ValueTable table;
  for (const auto& a : answers) {
    if (kind == QuestionKind::kMultiSelect) {
      for (const auto& p : split_parts(a, delimiter)) table.add(p);
    } else {
      table.add(a);
    }
  }
  auto top = table.top(kMaxChoiceValues);
  std::sort(top.begin(), top.end(),
            [](const auto& a, const auto& b) { return a.second.first_seen < b.second.first_seen; });
  std::vector<std::string> options;
  for (const auto& [key, vc] : top) options.push_back(vc.first_spelling);
  return options;
}

}  // namespace

QuestionKind infer_question_kind(std::string_view /*header*/,
                                 const std::vector<std::string>& answers,
                                 std::string_view delimiter) {
  std::vector<std::string> non_empty;
  for (const auto& a : answers) {
    if (!trim(a).empty()) non_empty.push_back(a);
  }
  if (non_empty.empty()) return QuestionKind::kOpenEnded;
  const double n = static_cast<double>(non_empty.size());

  // Multi-select: answers are delimiter-joined subsets of a small value set.
  {
    ValueTable parts;
    bool any_multi = false;
    std::vector<std::vector<std::string>> split;
    for (const auto& a : non_empty) {
      split.push_back(split_parts(a, delimiter));
      if (split.back().size() > 1) any_multi = true;
      for (const auto& p : split.back()) parts.add(p);
    }
    if (any_multi && parts.total > parts.counts.size()) {
      std::unordered_set<std::string> top;
      for (const auto& [key, vc] : parts.top(kMaxChoiceValues)) top.insert(key);
      std::size_t covered = 0;
      for (const auto& ps : split) {
        bool all_in = !ps.empty() && std::all_of(ps.begin(), ps.end(), [&](const auto& p) {
          return top.count(to_lower(p)) > 0;
        });
        if (all_in) ++covered;
      }
      if (static_cast<double>(covered) >= kChoiceCoverage * n) return QuestionKind::kMultiSelect;
    }
  }

  // Single choice: answers fall in a small value set and at least one repeats.
  ValueTable values;
  for (const auto& a : non_empty) values.add(a);
  if (values.total > values.counts.size()) {
    std::size_t covered = 0;
    for (const auto& [key, vc] : values.top(kMaxChoiceValues)) covered += vc.count;
    if (static_cast<double>(covered) >= kChoiceCoverage * n) return QuestionKind::kSingleChoice;
  }
  return QuestionKind::kOpenEnded;
}

namespace {

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == trim(name)) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> find_column_ci(const std::vector<std::string>& header,
                                          std::string_view name) {
  std::string want = to_lower(name);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (to_lower(trim(header[i])) == want) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> find_column_containing(const std::vector<std::string>& header,
                                                  std::initializer_list<std::string_view> needles) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string h = to_lower(header[i]);
    for (auto n : needles) {
      if (h.find(n) != std::string::npos) return i;
    }
  }
  return std::nullopt;
}

std::size_t require_column(const std::vector<std::string>& header, std::string_view name,
                           std::string_view role) {
  auto idx = find_column(header, name);
  if (!idx) {
    throw Error(ErrorCode::kMissingColumn,
                std::string(role) + " column '" + std::string(name) + "' not found in export");
  }
  return *idx;
}

}  // namespace

Assessment parse_export(std::string_view raw, const std::optional<AssessmentManifest>& manifest,
                        const ParseOptions& options) {
  if (manifest) manifest->validate();
  auto rows = read_csv(raw);
  if (rows.empty()) throw Error(ErrorCode::kEmptyExport, "export has no header row");
  const std::vector<std::string> header = rows.front();

  {
    std::set<std::string> seen;
    for (const auto& h : header) {
      if (!trim(h).empty() && !seen.insert(trim(h)).second) {
        throw Error(ErrorCode::kMalformedCsv, "duplicate column header '" + trim(h) + "'");
      }
    }
  }

  // Data rows: blank lines are skipped, short rows padded, long rows rejected.
  std::vector<std::vector<std::string>> data;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& row = rows[r];
    bool blank = std::all_of(row.begin(), row.end(), [](const auto& f) { return trim(f).empty(); });
    if (blank) continue;
    if (row.size() > header.size()) {
      throw Error(ErrorCode::kMalformedCsv, "row " + std::to_string(r + 1) + " has " +
                                                std::to_string(row.size()) + " fields, header has " +
                                                std::to_string(header.size()));
    }
    row.resize(header.size());
    data.push_back(std::move(row));
  }
  if (data.empty()) throw Error(ErrorCode::kEmptyExport, "export has no data rows");

  Assessment a;
  a.ingested_at = now_seconds();

  std::optional<std::size_t> ts_col;
  std::optional<std::size_t> student_col;
  std::optional<std::size_t> section_col;

  if (manifest && !manifest->timestamp_column.empty()) {
    ts_col = require_column(header, manifest->timestamp_column, "timestamp");
  } else {
    ts_col = find_column_ci(header, "Timestamp");
  }
  if (manifest && !manifest->student_column.empty()) {
    student_col = require_column(header, manifest->student_column, "student");
  } else {
    student_col = find_column_ci(header, "Name");
    if (!student_col) student_col = find_column_ci(header, "Email");
    if (!student_col) student_col = find_column_ci(header, "Email Address");
    if (!student_col) {
      throw Error(ErrorCode::kMissingColumn, "no student column ('Name' or 'Email') in export");
    }
  }
  if (manifest && !manifest->section_column.empty()) {
    section_col = require_column(header, manifest->section_column, "section");
  } else {
    section_col = find_column_ci(header, "Homeroom");
    if (!section_col) section_col = find_column_ci(header, "Section");
    if (!section_col) section_col = find_column_containing(header, {"homeroom", "section"});
  }

  struct Column {
    std::size_t index;
    Question question;
  };
  std::vector<Column> columns;

  auto column_answers = [&](std::size_t idx) {
    std::vector<std::string> out;
    out.reserve(data.size());
    for (const auto& row : data) out.push_back(row[idx]);
    return out;
  };

  if (manifest) {
    a.assessment_id = manifest->assessment_id;
    a.title = manifest->title.empty() ? manifest->assessment_id : manifest->title;
    a.kind = manifest->kind;
    a.delimiter = manifest->delimiter;
    for (const auto& mq : manifest->questions) {
      std::size_t idx = require_column(header, mq.column_header, "question");
      Question q;
      q.question_id = question_id_for(mq.column_header);
      q.text = trim(mq.column_header);
      q.kind = mq.kind;
      if (mq.kind != QuestionKind::kOpenEnded) q.options = mq.options;
      if (mq.exemplars) q.exemplars = *mq.exemplars;
      columns.push_back({idx, std::move(q)});
    }
  } else {
    a.assessment_id =
        options.assessment_id.empty() ? "a_" + sha256_hex(raw).substr(0, 12) : options.assessment_id;
    a.title = options.title;
    a.kind = options.kind;
    a.delimiter = options.delimiter;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i == ts_col || i == student_col || i == section_col) continue;
      if (trim(header[i]).empty()) continue;
      auto answers = column_answers(i);
      Question q;
      q.question_id = question_id_for(header[i]);
      q.text = trim(header[i]);
      q.kind = infer_question_kind(header[i], answers, a.delimiter);
      if (q.kind != QuestionKind::kOpenEnded) q.options = infer_options(answers, q.kind, a.delimiter);
      columns.push_back({i, std::move(q)});
    }
  }

  for (const auto& c : columns) a.questions.push_back(c.question);

  for (const auto& row : data) {
    StudentResponse r;
    r.student_name = trim(row[*student_col]);
    r.section = section_col ? trim(row[*section_col]) : std::string();
    if (r.section.empty()) r.section = std::string(kUnassignedSection);
    if (ts_col) r.submitted_at = parse_export_timestamp(row[*ts_col]);
    for (const auto& c : columns) r.answers[c.question.question_id] = row[c.index];
    a.sections.insert(r.section);
    a.responses.push_back(std::move(r));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Privacy

std::string pseudonym_for(std::string_view salt, std::string_view name) {
  if (salt.empty()) throw Error(ErrorCode::kMissingSalt, "pseudonymization salt is empty");
  // 64-bit tokens: collision odds for 10^4 names are ~3e-12.
  return "s_" + hmac_sha256_hex(salt, to_lower(trim(name))).substr(0, 16);
}

Assessment pseudonymize(Assessment assessment, std::string_view salt) {
  if (salt.empty()) throw Error(ErrorCode::kMissingSalt, "pseudonymization salt is empty");
  for (auto& r : assessment.responses) {
    if (r.student_name) {
      r.student_pseudonym = pseudonym_for(salt, *r.student_name);
      r.student_name.reset();
    }
  }
  return assessment;
}

const Question* Assessment::find_question(std::string_view question_id) const {
  for (const auto& q : questions) {
    if (q.question_id == question_id) return &q;
  }
  return nullptr;
}

bool Assessment::pseudonymized() const {
  return std::none_of(responses.begin(), responses.end(),
                      [](const auto& r) { return r.student_name.has_value(); });
}

// ---------------------------------------------------------------------------
// Validation

std::vector<ValidationIssue> validate_assessment(const Assessment& assessment) {
  std::vector<ValidationIssue> issues;
  std::set<std::pair<std::string, std::optional<Timestamp>>> seen;
  for (std::size_t i = 0; i < assessment.responses.size(); ++i) {
    const auto& r = assessment.responses[i];
    const std::string& identity = r.student_name ? *r.student_name : r.student_pseudonym;
    if (!seen.emplace(identity, r.submitted_at).second) {
      issues.push_back({IssueKind::kDuplicateRow, i, "",
                        "row " + std::to_string(i) + " repeats an earlier (student, timestamp) pair"});
    }
    for (const auto& [qid, answer] : r.answers) {
      const Question* q = assessment.find_question(qid);
      if (q == nullptr) {
        issues.push_back({IssueKind::kUnknownQuestion, i, qid, "answer to unknown question"});
        continue;
      }
      if (q->kind != QuestionKind::kSingleChoice || !q->options) continue;
      std::string value = trim(answer);
      if (value.empty()) continue;
      if (std::find(q->options->begin(), q->options->end(), value) == q->options->end()) {
        issues.push_back({IssueKind::kOutOfOptions, i, qid, "answer '" + value + "' is not an option"});
      }
    }
  }
  return issues;
}

Json to_json(const ValidationIssue& issue) {
  Json j;
  j["kind"] = to_string(issue.kind);
  j["row"] = issue.row;
  j["question_id"] = issue.question_id;
  j["detail"] = issue.detail;
  return j;
}

// ---------------------------------------------------------------------------
// Serialization

Json to_json(const Question& q) {
  Json j;
  j["question_id"] = q.question_id;
  j["text"] = q.text;
  j["kind"] = to_string(q.kind);
  j["options"] = q.options ? Json(*q.options) : Json(nullptr);
  j["exemplars"] = q.exemplars;
  return j;
}

Json to_json(const Assessment& a) {
  if (!a.pseudonymized()) {
    throw Error(ErrorCode::kSchemaViolation, "assessment must be pseudonymized before serialization");
  }
  Json j;
  j["schema_version"] = "1";
  j["assessment_id"] = a.assessment_id;
  j["title"] = a.title;
  j["kind"] = to_string(a.kind);
  j["delimiter"] = a.delimiter;
  j["ingested_at"] = format_timestamp(a.ingested_at);
  j["sections"] = a.sections;
  Json qs = Json::array();
  for (const auto& q : a.questions) qs.push_back(to_json(q));
  j["questions"] = std::move(qs);
  Json rs = Json::array();
  for (const auto& r : a.responses) {
    Json jr;
    jr["student_pseudonym"] = r.student_pseudonym;
    jr["section"] = r.section;
    jr["submitted_at"] = r.submitted_at ? Json(format_timestamp(*r.submitted_at)) : Json(nullptr);
    Json answers = Json::object();
    for (const auto& [qid, ans] : r.answers) answers[qid] = ans;
    jr["answers"] = std::move(answers);
    rs.push_back(std::move(jr));
  }
  j["responses"] = std::move(rs);
  return j;
}

Assessment assessment_from_json(const Json& j) {
  Assessment a;
  try {
    if (j.at("schema_version").get<std::string>() != "1") {
      throw Error(ErrorCode::kSchemaViolation, "unsupported assessment schema_version");
    }
    a.assessment_id = j.at("assessment_id").get<std::string>();
    a.title = j.at("title").get<std::string>();
    a.kind = parse_assessment_kind(j.at("kind").get<std::string>());
    a.delimiter = j.value("delimiter", std::string(kDefaultDelimiter));
    auto ingested = parse_iso_timestamp(j.at("ingested_at").get<std::string>());
    if (!ingested) throw Error(ErrorCode::kSchemaViolation, "bad ingested_at");
    a.ingested_at = *ingested;
    for (const auto& s : j.at("sections")) a.sections.insert(s.get<std::string>());
    for (const auto& jq : j.at("questions")) {
      Question q;
      q.question_id = jq.at("question_id").get<std::string>();
      q.text = jq.at("text").get<std::string>();
      q.kind = parse_question_kind(jq.at("kind").get<std::string>());
      q.options = optional_strings(jq, "options");
      q.exemplars = jq.value("exemplars", std::vector<std::string>{});
      a.questions.push_back(std::move(q));
    }
    for (const auto& jr : j.at("responses")) {
      StudentResponse r;
      r.student_pseudonym = jr.at("student_pseudonym").get<std::string>();
      r.section = jr.at("section").get<std::string>();
      if (!jr.at("submitted_at").is_null()) {
        r.submitted_at = parse_iso_timestamp(jr.at("submitted_at").get<std::string>());
      }
      for (const auto& [qid, ans] : jr.at("answers").items()) r.answers[qid] = ans.get<std::string>();
      a.responses.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("assessment document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidManifest) throw Error(ErrorCode::kSchemaViolation, e.what());
    throw;
  }
  return a;
}

namespace {

std::string export_timestamp(Timestamp t) {
  std::string iso = format_timestamp(t);  // YYYY-MM-DDTHH:MM:SSZ
  iso[10] = ' ';
  iso.pop_back();
  return iso;
}

}  // namespace

std::string to_csv(const Assessment& a) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Timestamp", "Name", "Homeroom"};
  for (const auto& q : a.questions) header.push_back(q.text);
  rows.push_back(std::move(header));
  for (const auto& r : a.responses) {
    std::vector<std::string> row;
    row.push_back(r.submitted_at ? export_timestamp(*r.submitted_at) : std::string());
    row.push_back(r.student_name ? *r.student_name : r.student_pseudonym);
    row.push_back(r.section);
    for (const auto& q : a.questions) {
      auto it = r.answers.find(q.question_id);
      row.push_back(it == r.answers.end() ? std::string() : it->second);
    }
    rows.push_back(std::move(row));
  }
  return write_csv(rows);
}

}  // namespace classlens
