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

#include "classlens/insights.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "classlens/analytics.hpp"
#include "classlens/error.hpp"
#include "classlens/util.hpp"

namespace classlens {

// ---------------------------------------------------------------------------
// Curriculum context

void CurriculumContext::validate() const {
  if (goals.empty()) throw Error(ErrorCode::kInvalidArgument, "curriculum context has no goals");
  for (const auto& m : out_of_scope_markers) {
    for (const auto& t : topic_lexicon) {
      if (to_lower(m) == to_lower(t)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "'" + m + "' is both an in-scope topic and an out-of-scope marker");
      }
    }
  }
}

CurriculumContext curriculum_from_json(const Json& j) {
  CurriculumContext ctx;
  try {
    ctx.curriculum_title = j.at("curriculum_title").get<std::string>();
    ctx.goals = j.at("goals").get<std::vector<std::string>>();
    ctx.crosscutting_concepts =
        j.value("crosscutting_concepts", std::vector<std::string>{});
    for (const auto& t : j.value("topic_lexicon", std::vector<std::string>{})) {
      ctx.topic_lexicon.insert(t);
    }
    for (const auto& t : j.value("out_of_scope_markers", std::vector<std::string>{})) {
      ctx.out_of_scope_markers.insert(t);
    }
    ctx.grade_band = j.value("grade_band", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("curriculum context: ") + e.what());
  }
  ctx.validate();
  return ctx;
}

Json to_json(const CurriculumContext& ctx) {
  Json j;
  j["curriculum_title"] = ctx.curriculum_title;
  j["goals"] = ctx.goals;
  j["crosscutting_concepts"] = ctx.crosscutting_concepts;
  j["topic_lexicon"] = ctx.topic_lexicon;
  j["out_of_scope_markers"] = ctx.out_of_scope_markers;
  j["grade_band"] = ctx.grade_band;
  return j;
}

// ---------------------------------------------------------------------------
// Templates

namespace {

constexpr std::string_view kDefaultTemplateText = R"(# Default classroom-insights prompt.
# Review checklist for edits: docs/templates.md. Bump @version on every change.
@template_id insights-default
@version 1
@token_budget 6000
@role
You are an instructional analytics assistant working with a middle school science teacher. You read every student's written answer to one assessment question and report what the class as a whole understands and which misconceptions or gaps are common. You describe what the responses show. You do not grade individual students.
@body
{{role}}

{{goals}}

{{concepts}}

Assessment question:
{{question}}

{{exemplars}}

{{responses}}

{{output_instructions}}
)";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

void PromptTemplate::validate() const {
  if (template_id.empty()) throw Error(ErrorCode::kTemplateInvalid, "template_id is empty");
  if (version < 1) throw Error(ErrorCode::kTemplateInvalid, "template version must be >= 1");
  if (token_budget < 1) throw Error(ErrorCode::kTemplateInvalid, "token_budget must be positive");
  for (auto name : kTemplatePlaceholders) {
    std::string marker = "{{" + std::string(name) + "}}";
    std::size_t n = count_occurrences(body, marker);
    if (n != 1) {
      throw Error(ErrorCode::kTemplateInvalid, "placeholder " + marker + " appears " +
                                                   std::to_string(n) + " times (expected once)");
    }
  }
  // Anything else that looks like a placeholder is a typo.
  for (auto pos = body.find("{{"); pos != std::string::npos; pos = body.find("{{", pos + 2)) {
    auto end = body.find("}}", pos);
    if (end == std::string::npos) break;
    std::string_view name(body.data() + pos + 2, end - pos - 2);
    if (std::find(std::begin(kTemplatePlaceholders), std::end(kTemplatePlaceholders), name) ==
        std::end(kTemplatePlaceholders)) {
      throw Error(ErrorCode::kTemplateInvalid, "unknown placeholder {{" + std::string(name) + "}}");
    }
  }
}

PromptTemplate parse_template(std::string_view text) {
  PromptTemplate t;
  t.version = 0;
  t.token_budget = 0;
  enum class Block { kNone, kRole, kBody } block = Block::kNone;
  std::string role, body;
  bool seen_directive = false;

  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '@') {
      seen_directive = true;
      auto space = line.find(' ');
      std::string key = line.substr(1, space == std::string::npos ? std::string::npos : space - 1);
      std::string value = space == std::string::npos ? std::string() : trim(line.substr(space + 1));
      try {
        if (key == "template_id") {
          t.template_id = value;
          block = Block::kNone;
        } else if (key == "version") {
          t.version = std::stoi(value);
          block = Block::kNone;
        } else if (key == "token_budget") {
          t.token_budget = std::stoll(value);
          block = Block::kNone;
        } else if (key == "role") {
          block = Block::kRole;
        } else if (key == "body") {
          block = Block::kBody;
        } else {
          throw Error(ErrorCode::kTemplateInvalid, "unknown template directive @" + key);
        }
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::kTemplateInvalid, "bad value for @" + key + ": '" + value + "'");
      }
      continue;
    }
    if (!seen_directive) continue;  // header comments
    if (block == Block::kRole) role += line + "\n";
    if (block == Block::kBody) body += line + "\n";
  }
  t.role_preamble = strip_trailing_newlines(role);
  t.body = strip_trailing_newlines(body);
  t.validate();
  return t;
}

std::string format_template(const PromptTemplate& t) {
  std::ostringstream out;
  out << "@template_id " << t.template_id << "\n"
      << "@version " << t.version << "\n"
      << "@token_budget " << t.token_budget << "\n"
      << "@role\n" << t.role_preamble << "\n"
      << "@body\n" << t.body << "\n";
  return out.str();
}

const PromptTemplate& default_template() {
  static const PromptTemplate kTemplate = parse_template(kDefaultTemplateText);
  return kTemplate;
}

void TemplateRegistry::add(PromptTemplate tmpl) {
  tmpl.validate();
  auto& versions = templates_[tmpl.template_id];
  if (auto it = versions.find(tmpl.version); it != versions.end()) {
    if (it->second == tmpl) return;
    throw Error(ErrorCode::kTemplateInvalid, "template " + tmpl.template_id + " version " +
                                                 std::to_string(tmpl.version) +
                                                 " already exists with different content");
  }
  if (!versions.empty() && versions.rbegin()->first > tmpl.version) {
    throw Error(ErrorCode::kTemplateInvalid,
                "template " + tmpl.template_id + " version " + std::to_string(tmpl.version) +
                    " is older than the registered version " +
                    std::to_string(versions.rbegin()->first));
  }
  versions.emplace(tmpl.version, std::move(tmpl));
}

const PromptTemplate& TemplateRegistry::latest(std::string_view template_id) const {
  auto it = templates_.find(template_id);
  if (it == templates_.end() || it->second.empty()) {
    throw Error(ErrorCode::kNotFound, "unknown template '" + std::string(template_id) + "'");
  }
  return it->second.rbegin()->second;
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, versions] : templates_) out.push_back(id);
  return out;
}

void TemplateRegistry::load_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tmpl") files.push_back(entry.path());
  }
  std::vector<PromptTemplate> parsed;
  for (const auto& f : files) parsed.push_back(parse_template(read_file(f)));
  // Register in version order so directory order never trips the monotonic check.
  std::sort(parsed.begin(), parsed.end(), [](const auto& a, const auto& b) {
    return std::tie(a.template_id, a.version) < std::tie(b.template_id, b.version);
  });
  for (auto& t : parsed) add(std::move(t));
}

// ---------------------------------------------------------------------------
// Prompt assembly

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<std::int64_t>& sizes) {
  const std::int64_t population = std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
  std::vector<std::int64_t> out(sizes.size(), 0);
  if (population == 0 || total <= 0) return out;
  total = std::min(total, population);
  std::vector<std::pair<std::int64_t, std::size_t>> remainders;  // (remainder numerator, index)
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::int64_t num = total * sizes[i];
    out[i] = num / population;
    assigned += out[i];
    remainders.emplace_back(num % population, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k) {
    ++out[remainders[k].second];
    ++assigned;
  }
  return out;
}

std::string output_instructions(bool include_prescriptive) {
  std::string s =
      "Respond with exactly one fenced ```json code block containing a single JSON object with "
      "these fields:\n"
      "- \"summary\": string. A concise description of the class's collective understanding.\n"
      "- \"understanding_themes\": array of strings. Ideas that many responses share.\n"
      "- \"misconceptions\": array of objects {\"claim\": string, \"evidence\": array of "
      "strings}. Each claim names a common misconception or gap. Each evidence string must be "
      "copied verbatim from a student response above.\n"
      "- \"vocabulary_issues\": array of strings. Misspelled, misused or missing key terms.\n";
  if (include_prescriptive) {
    s += "- \"prescriptive_suggestions\": array of strings. Possible next instructional steps. "
         "Keep these out of every other field.\n";
  } else {
    s += "Do not recommend instructional changes. Describe only what the responses show.\n";
  }
  s += "Base every statement on the student responses. Do not introduce topics that are outside "
       "the curriculum.";
  return s;
}

namespace {

std::string one_line(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool space = false;
  for (char c : trim(s)) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    if (c == ' ') {
      if (!space) out.push_back(' ');
      space = true;
    } else {
      out.push_back(c);
      space = false;
    }
  }
  return out;
}

std::string bullet_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += "- " + one_line(i) + "\n";
  return strip_trailing_newlines(out);
}

std::string join(const std::set<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& i : items) {
    if (!out.empty()) out += sep;
    out += i;
  }
  return out;
}

std::string goals_block(const CurriculumContext& ctx) {
  std::string s = "Curriculum: " + ctx.curriculum_title;
  if (!ctx.grade_band.empty()) s += " (grade band: " + ctx.grade_band + ")";
  s += "\nCurriculum goals:\n" + bullet_list(ctx.goals);
  if (!ctx.topic_lexicon.empty()) s += "\nIn-scope topics: " + join(ctx.topic_lexicon, ", ");
  if (!ctx.out_of_scope_markers.empty()) {
    s += "\nTopics that are NOT part of this curriculum (do not recommend or emphasize them): " +
         join(ctx.out_of_scope_markers, ", ");
  }
  return s;
}

std::string concepts_block(const CurriculumContext& ctx) {
  if (ctx.crosscutting_concepts.empty()) return "Relevant crosscutting concepts: none listed.";
  return "Relevant crosscutting concepts:\n" + bullet_list(ctx.crosscutting_concepts);
}

std::string exemplars_block(const std::vector<std::string>& exemplars) {
  if (exemplars.empty()) return {};
  std::string s =
      "Correct example answers written by the teacher. Use them to judge accuracy. They are not "
      "student responses and must not be quoted as evidence:\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    s += "Example " + std::to_string(i + 1) + ": " + one_line(exemplars[i]) + "\n";
  }
  return strip_trailing_newlines(s);
}

// Single pass over the body so placeholder-like text inside substituted
// values is never expanded.
std::string render(const std::string& body, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto open = body.find("{{", pos);
    if (open == std::string::npos) {
      out.append(body, pos);
      break;
    }
    auto close = body.find("}}", open);
    auto it = close == std::string::npos ? values.end()
                                         : values.find(body.substr(open + 2, close - open - 2));
    if (it == values.end()) {
      out.append(body, pos, open + 2 - pos);
      pos = open + 2;
      continue;
    }
    out.append(body, pos, open - pos);
    out += it->second;
    pos = close + 2;
  }
  // Empty blocks leave runs of blank lines behind.
  std::string collapsed;
  std::size_t newlines = 0;
  for (char c : out) {
    newlines = c == '\n' ? newlines + 1 : 0;
    if (newlines <= 2) collapsed.push_back(c);
  }
  return collapsed;
}

}  // namespace

AssembledPrompt assemble_prompt(const Question& question,
                                std::span<const SectionedResponse> responses,
                                const CurriculumContext& ctx, const PromptTemplate& tmpl,
                                const std::vector<std::string>& exemplars,
                                const PromptOptions& options) {
  tmpl.validate();
  std::vector<const SectionedResponse*> answered;
  for (const auto& r : responses) {
    if (!trim(r.text).empty()) answered.push_back(&r);
  }
  if (answered.empty()) {
    throw Error(ErrorCode::kNoResponses, "no non-empty responses for question " + question.question_id);
  }

  std::map<std::string, std::string> values{
      {"role", tmpl.role_preamble},
      {"goals", goals_block(ctx)},
      {"concepts", concepts_block(ctx)},
      {"question", one_line(question.text)},
      {"exemplars", exemplars_block(exemplars)},
      {"output_instructions", output_instructions(options.include_prescriptive)},
  };

  // Per-section index lists in input order, plus one seeded permutation each.
  std::map<std::string, std::vector<std::size_t>> by_section;
  for (std::size_t i = 0; i < answered.size(); ++i) by_section[answered[i]->section].push_back(i);
  std::vector<std::string> section_names;
  std::vector<std::int64_t> sizes;
  std::vector<std::vector<std::size_t>> permuted;
  SeededRng rng(options.seed);
  for (const auto& [name, idx] : by_section) {
    section_names.push_back(name);
    sizes.push_back(static_cast<std::int64_t>(idx.size()));
    auto p = idx;
    rng.shuffle(p);
    permuted.push_back(std::move(p));
  }
  const auto total = static_cast<std::int64_t>(answered.size());

  auto build = [&](std::int64_t n, AssembledPrompt& out) {
    auto quota = apportion(n, sizes);
    std::vector<std::size_t> chosen;
    out.included_per_section.clear();
    for (std::size_t s = 0; s < permuted.size(); ++s) {
      chosen.insert(chosen.end(), permuted[s].begin(), permuted[s].begin() + quota[s]);
      out.included_per_section[section_names[s]] = quota[s];
    }
    std::sort(chosen.begin(), chosen.end());
    std::string block = "Student responses (" + std::to_string(chosen.size());
    if (n < total) {
      block += " of " + std::to_string(total) + ", sampled in proportion to class section sizes";
    }
    block += "):\n";
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      block += std::to_string(k + 1) + ". " + one_line(answered[chosen[k]]->text) + "\n";
    }
    values["responses"] = strip_trailing_newlines(block);
    out.text = render(tmpl.body, values);
    out.estimated_tokens = estimate_tokens(out.text);
    out.total_responses = total;
    out.included_responses = static_cast<std::int64_t>(chosen.size());
    return out.estimated_tokens <= tmpl.token_budget;
  };

  AssembledPrompt prompt;
  if (build(total, prompt)) return prompt;

  // Largest n that fits. Prompt length grows with n for a fixed seed, so a
  // binary search finds it; the downward scan covers apportionment quirks.
  std::int64_t lo = 0, hi = total - 1;
  AssembledPrompt probe;
  while (lo < hi) {
    std::int64_t mid = lo + (hi - lo + 1) / 2;
    if (build(mid, probe)) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  for (std::int64_t n = lo; n >= 1; --n) {
    if (build(n, prompt)) return prompt;
  }
  throw Error(ErrorCode::kTemplateInvalid,
              "token budget " + std::to_string(tmpl.token_budget) +
                  " cannot fit the fixed prompt content plus one response");
}

AssembledPrompt assemble_prompt(const Question& question, const std::vector<std::string>& responses,
                                const CurriculumContext& ctx, const PromptTemplate& tmpl,
                                const std::vector<std::string>& exemplars,
                                const PromptOptions& options) {
  std::vector<SectionedResponse> sectioned;
  sectioned.reserve(responses.size());
  for (const auto& r : responses) sectioned.push_back({"", r});
  return assemble_prompt(question, sectioned, ctx, tmpl, exemplars, options);
}

// ---------------------------------------------------------------------------
// Report parsing

namespace {

Json optional_string(const std::optional<std::string>& s) { return s ? Json(*s) : Json(nullptr); }

[[noreturn]] void unparseable(const std::string& why) {
  throw Error(ErrorCode::kUnparseableCompletion, "completion does not match the report schema: " + why);
}

std::vector<std::string> string_array(const Json& j, const char* key) {
  if (!j.contains(key)) unparseable(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_array()) unparseable(std::string("'") + key + "' is not an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) unparseable(std::string("'") + key + "' holds a non-string");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::optional<std::string_view> extract_json_text(std::string_view completion) {
  auto lower = to_lower(completion);
  auto fence = lower.find("```json");
  std::size_t start = std::string::npos;
  if (fence != std::string::npos) {
    start = fence + 7;
  } else if ((fence = lower.find("```")) != std::string::npos) {
    start = fence + 3;
  }
  if (start != std::string::npos) {
    auto close = completion.find("```", start);
    if (close == std::string_view::npos) return std::nullopt;
    return completion.substr(start, close - start);
  }
  std::string trimmed = trim(completion);
  if (!trimmed.empty() && trimmed.front() == '{' && trimmed.back() == '}') {
    auto first = completion.find('{');
    auto last = completion.rfind('}');
    return completion.substr(first, last - first + 1);
  }
  return std::nullopt;
}

}  // namespace

InsightReport parse_completion(std::string_view completion) {
  auto text = extract_json_text(completion);
  if (!text) unparseable("no fenced JSON block found");
  Json j = Json::parse(text->begin(), text->end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) unparseable("fenced block is not valid JSON");
  if (!j.is_object()) unparseable("top level is not an object");

  InsightReport r;
  if (!j.contains("summary") || !j.at("summary").is_string()) unparseable("missing string 'summary'");
  r.summary = trim(j.at("summary").get<std::string>());
  if (r.summary.empty()) unparseable("'summary' is empty");
  r.understanding_themes = string_array(j, "understanding_themes");
  r.vocabulary_issues = string_array(j, "vocabulary_issues");
  if (!j.contains("misconceptions") || !j.at("misconceptions").is_array()) {
    unparseable("missing array 'misconceptions'");
  }
  for (const auto& m : j.at("misconceptions")) {
    if (!m.is_object() || !m.contains("claim") || !m.at("claim").is_string()) {
      unparseable("misconception without a string 'claim'");
    }
    Misconception mc;
    mc.claim = m.at("claim").get<std::string>();
    mc.evidence = string_array(m, "evidence");
    r.misconceptions.push_back(std::move(mc));
  }
  if (j.contains("prescriptive_suggestions") && !j.at("prescriptive_suggestions").is_null()) {
    r.prescriptive_suggestions = string_array(j, "prescriptive_suggestions");
  }
  return r;
}

namespace {

constexpr std::string_view kSchemaReminder =
    "\n\nReminder: your previous answer could not be parsed. Reply with only one fenced ```json "
    "block holding an object with the fields \"summary\" (non-empty string), "
    "\"understanding_themes\" (array of strings), \"misconceptions\" (array of {\"claim\": "
    "string, \"evidence\": array of strings}) and \"vocabulary_issues\" (array of strings).";

}  // namespace

InsightReport generate_insights(const std::string& prompt, Provider& provider,
                                const GenerationMeta& meta) {
  InsightReport report;
  try {
    report = parse_completion(provider.complete(prompt));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUnparseableCompletion) throw;
    report = parse_completion(provider.complete(prompt + std::string(kSchemaReminder)));
  }
  report.question_id = meta.question_id;
  report.section_filter = meta.section_filter;
  if (!meta.include_prescriptive) {
    report.prescriptive_suggestions.reset();
  } else if (!report.prescriptive_suggestions) {
    report.prescriptive_suggestions.emplace();
  }
  report.provenance = {meta.template_id, meta.template_version, provider.provider_id(),
                       provider.model_id(), format_timestamp(now_seconds())};
  return report;
}

Json to_json(const InsightReport& r) {
  Json j;
  j["question_id"] = r.question_id;
  j["section_filter"] = optional_string(r.section_filter);
  j["summary"] = r.summary;
  j["understanding_themes"] = r.understanding_themes;
  Json ms = Json::array();
  for (const auto& m : r.misconceptions) ms.push_back(Json{{"claim", m.claim}, {"evidence", m.evidence}});
  j["misconceptions"] = std::move(ms);
  j["vocabulary_issues"] = r.vocabulary_issues;
  if (r.prescriptive_suggestions) {
    j["prescriptive_suggestions"] =
        Json{{"flag", kPrescriptiveFlag}, {"items", *r.prescriptive_suggestions}};
  } else {
    j["prescriptive_suggestions"] = nullptr;
  }
  j["provenance"] = Json{{"template_id", r.provenance.template_id},
                         {"version", r.provenance.version},
                         {"provider_id", r.provenance.provider_id},
                         {"model_id", r.provenance.model_id},
                         {"generated_at", r.provenance.generated_at}};
  return j;
}

InsightReport insight_report_from_json(const Json& j) {
  InsightReport r;
  try {
    r.question_id = j.at("question_id").get<std::string>();
    if (!j.at("section_filter").is_null()) r.section_filter = j.at("section_filter").get<std::string>();
    r.summary = j.at("summary").get<std::string>();
    r.understanding_themes = j.at("understanding_themes").get<std::vector<std::string>>();
    for (const auto& m : j.at("misconceptions")) {
      r.misconceptions.push_back(
          {m.at("claim").get<std::string>(), m.at("evidence").get<std::vector<std::string>>()});
    }
    r.vocabulary_issues = j.at("vocabulary_issues").get<std::vector<std::string>>();
    const auto& ps = j.at("prescriptive_suggestions");
    if (!ps.is_null()) {
      if (ps.at("flag").get<std::string>() != kPrescriptiveFlag) {
        throw Error(ErrorCode::kSchemaViolation, "prescriptive suggestions lost their flag");
      }
      r.prescriptive_suggestions = ps.at("items").get<std::vector<std::string>>();
    }
    const auto& p = j.at("provenance");
    r.provenance = {p.at("template_id").get<std::string>(), p.at("version").get<int>(),
                    p.at("provider_id").get<std::string>(), p.at("model_id").get<std::string>(),
                    p.at("generated_at").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("insight report: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Grounding and scope

GroundedReport ground_check(const InsightReport& report, const std::vector<std::string>& responses) {
  std::vector<std::string> haystacks;
  haystacks.reserve(responses.size());
  for (const auto& r : responses) haystacks.push_back(normalized_form(r));

  auto grounded = [&](const std::string& fragment) {
    std::string needle = normalized_form(fragment);
    if (needle.empty()) return false;
    return std::any_of(haystacks.begin(), haystacks.end(),
                       [&](const std::string& h) { return h.find(needle) != std::string::npos; });
  };

  GroundedReport out;
  out.report = report;
  out.report.misconceptions.clear();
  for (const auto& m : report.misconceptions) {
    Misconception kept{m.claim, {}};
    for (const auto& e : m.evidence) {
      ++out.coverage.fragments_total;
      if (grounded(e)) {
        ++out.coverage.fragments_kept;
        kept.evidence.push_back(e);
      }
    }
    if (kept.evidence.empty()) {
      out.dropped.push_back({m.claim, std::string(kUngroundedReason)});
    } else {
      out.report.misconceptions.push_back(std::move(kept));
    }
  }
  return out;
}

namespace {

bool word_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80;
}

void scan_field(const std::string& text, const std::string& location,
                const std::set<std::string>& markers, std::vector<ScopeFlag>& flags) {
  const std::string hay = to_lower(text);
  std::vector<ScopeFlag> found;
  for (const auto& marker : markers) {
    const std::string needle = to_lower(trim(marker));
    if (needle.empty()) continue;
    std::size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
      bool left = pos == 0 || !word_byte(hay[pos - 1]);
      std::size_t end = pos + needle.size();
      bool right = end >= hay.size() || !word_byte(hay[end]);
      if (left && right) {
        found.push_back({marker, location, pos});
        pos = end;
      } else {
        ++pos;
      }
    }
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const ScopeFlag& a, const ScopeFlag& b) { return a.offset < b.offset; });
  flags.insert(flags.end(), found.begin(), found.end());
}

}  // namespace

std::vector<ScopeFlag> scope_check(const InsightReport& report, const CurriculumContext& ctx) {
  std::vector<ScopeFlag> flags;
  const auto& markers = ctx.out_of_scope_markers;
  scan_field(report.summary, "summary", markers, flags);
  for (std::size_t i = 0; i < report.understanding_themes.size(); ++i) {
    scan_field(report.understanding_themes[i], "understanding_themes[" + std::to_string(i) + "]",
               markers, flags);
  }
  for (std::size_t i = 0; i < report.misconceptions.size(); ++i) {
    scan_field(report.misconceptions[i].claim, "misconceptions[" + std::to_string(i) + "].claim",
               markers, flags);
  }
  for (std::size_t i = 0; i < report.vocabulary_issues.size(); ++i) {
    scan_field(report.vocabulary_issues[i], "vocabulary_issues[" + std::to_string(i) + "]", markers,
               flags);
  }
  if (report.prescriptive_suggestions) {
    for (std::size_t i = 0; i < report.prescriptive_suggestions->size(); ++i) {
      scan_field((*report.prescriptive_suggestions)[i],
                 "prescriptive_suggestions[" + std::to_string(i) + "]", markers, flags);
    }
  }
  return flags;
}

Json to_json(const GroundedReport& g) {
  Json j;
  j["schema_version"] = "1";
  j["report"] = to_json(g.report);
  Json dropped = Json::array();
  for (const auto& d : g.dropped) dropped.push_back(Json{{"claim", d.claim}, {"reason", d.reason}});
  j["dropped"] = std::move(dropped);
  Json flags = Json::array();
  for (const auto& f : g.scope_flags) {
    flags.push_back(Json{{"term", f.term}, {"location", f.location}, {"offset", f.offset}});
  }
  j["scope_flags"] = std::move(flags);
  j["grounding"] = Json{{"fragments_total", g.coverage.fragments_total},
                        {"fragments_kept", g.coverage.fragments_kept}};
  return j;
}

GroundedReport grounded_report_from_json(const Json& j) {
  GroundedReport g;
  try {
    if (j.at("schema_version").get<std::string>() != "1") {
      throw Error(ErrorCode::kSchemaViolation, "unsupported grounded report schema_version");
    }
    g.report = insight_report_from_json(j.at("report"));
    for (const auto& d : j.at("dropped")) {
      g.dropped.push_back({d.at("claim").get<std::string>(), d.at("reason").get<std::string>()});
    }
    for (const auto& f : j.at("scope_flags")) {
      g.scope_flags.push_back({f.at("term").get<std::string>(), f.at("location").get<std::string>(),
                               f.at("offset").get<std::size_t>()});
    }
    g.coverage = {j.at("grounding").at("fragments_total").get<std::int64_t>(),
                  j.at("grounding").at("fragments_kept").get<std::int64_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("grounded report: ") + e.what());
  }
  return g;
}

// ---------------------------------------------------------------------------
// Cache

std::string CacheKey::digest() const {
  Json j = Json::array({assessment_id, question_id, optional_string(section_filter), template_id,
                        template_version, provider_id, model_id, include_prescriptive});
  return sha256_hex(j.dump()).substr(0, 32);
}

InsightCache::InsightCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path InsightCache::path_for(const CacheKey& key) const {
  return dir_ / (key.digest() + ".json");
}

std::optional<GroundedReport> InsightCache::get(const CacheKey& key) const {
  std::shared_lock lock(mutex_);
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  try {
    Json j = Json::parse(read_file(path));
    return grounded_report_from_json(j);
  } catch (const std::exception& e) {
    log_warning("insight cache entry " + path.filename().string() + " is unreadable (" + e.what() +
                "); recomputing");
    return std::nullopt;
  }
}

void InsightCache::put(const CacheKey& key, const GroundedReport& report) {
  std::unique_lock lock(mutex_);
  write_file_atomic(path_for(key), to_json(report).dump(2) + "\n");
}

GroundedReport InsightCache::get_or_compute(const CacheKey& key,
                                            const std::function<GroundedReport()>& compute) {
  if (auto hit = get(key)) return *hit;

  const std::string digest = key.digest();
  std::promise<GroundedReport> promise;
  std::shared_future<GroundedReport> future;
  bool owner = false;
  {
    std::lock_guard lock(inflight_mutex_);
    auto it = inflight_.find(digest);
    if (it == inflight_.end()) {
      future = promise.get_future().share();
      inflight_.emplace(digest, future);
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (!owner) return future.get();

  try {
    if (auto hit = get(key)) {
      promise.set_value(*hit);
    } else {
      GroundedReport result = compute();
      put(key, result);
      promise.set_value(std::move(result));
    }
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(digest);
  }
  return future.get();
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

const Question& require_question(const Assessment& a, const std::string& question_id) {
  const Question* q = a.find_question(question_id);
  if (q == nullptr) throw Error(ErrorCode::kNotFound, "unknown question '" + question_id + "'");
  return *q;
}

}  // namespace

AssembledPrompt prompt_for(const Assessment& assessment, const InsightRequest& request,
                           const CurriculumContext& ctx, const PromptTemplate& tmpl) {
  const Question& q = require_question(assessment, request.question_id);
  std::vector<SectionedResponse> sectioned;
  for (const auto& r : section_filter(assessment, request.section)) {
    auto it = r.answers.find(q.question_id);
    if (it != r.answers.end()) sectioned.push_back({r.section, it->second});
  }
  return assemble_prompt(q, sectioned, ctx, tmpl, q.exemplars,
                         {request.seed, request.include_prescriptive});
}

GroundedReport run_insight_pipeline(const Assessment& assessment, const InsightRequest& request,
                                    const CurriculumContext& ctx, const PromptTemplate& tmpl,
                                    Provider& provider) {
  AssembledPrompt prompt = prompt_for(assessment, request, ctx, tmpl);
  GenerationMeta meta{request.question_id, request.section, tmpl.template_id, tmpl.version,
                      request.include_prescriptive};
  InsightReport report = generate_insights(prompt.text, provider, meta);
  auto answers = split_non_responses(
      answers_for(section_filter(assessment, request.section), request.question_id));
  GroundedReport grounded = ground_check(report, answers.answered);
  grounded.scope_flags = scope_check(grounded.report, ctx);
  return grounded;
}

CacheKey cache_key_for(const Assessment& assessment, const InsightRequest& request,
                       const PromptTemplate& tmpl, const Provider& provider) {
  return {assessment.assessment_id, request.question_id,  request.section,
          tmpl.template_id,         tmpl.version,         provider.provider_id(),
          provider.model_id(),      request.include_prescriptive};
}

GroundedReport cached_insights(InsightCache& cache, const Assessment& assessment,
                               const InsightRequest& request, const CurriculumContext& ctx,
                               const PromptTemplate& tmpl, Provider& provider) {
  // Validate the request before consulting the cache so bad ids never hit.
  require_question(assessment, request.question_id);
  if (request.section && assessment.sections.count(*request.section) == 0) {
    throw Error(ErrorCode::kUnknownSection, "unknown section '" + *request.section + "'");
  }
  return cache.get_or_compute(cache_key_for(assessment, request, tmpl, provider), [&] {
    return run_insight_pipeline(assessment, request, ctx, tmpl, provider);
  });
}

}  // namespace classlens
