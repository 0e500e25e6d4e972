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

#ifndef CLASSLENS_INSIGHTS_HPP_
#define CLASSLENS_INSIGHTS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "classlens/ingest.hpp"
#include "classlens/json.hpp"
#include "classlens/provider.hpp"

namespace classlens {

// ---------------------------------------------------------------------------
// Curriculum context

struct CurriculumContext {
  std::string curriculum_title;
  std::vector<std::string> goals;
  std::vector<std::string> crosscutting_concepts;
  std::set<std::string> topic_lexicon;
  // Known confusables the model must not drift into.
  std::set<std::string> out_of_scope_markers;
  std::string grade_band;

  // Throws kInvalidArgument: goals empty, or lexicon and markers intersect.
  void validate() const;
};

CurriculumContext curriculum_from_json(const Json& j);
Json to_json(const CurriculumContext& ctx);

// ---------------------------------------------------------------------------
// Prompt templates
//
// Template files are plain text:
//
//   # comment lines before the first directive are ignored
//   @template_id insights-default
//   @version 3
//   @token_budget 6000
//   @role
//   <role preamble, any number of lines>
//   @body
//   <body containing each placeholder exactly once>
//
// Placeholders: {{role}} {{goals}} {{concepts}} {{question}} {{exemplars}}
// {{responses}} {{output_instructions}}.

inline constexpr std::string_view kTemplatePlaceholders[] = {
    "role", "goals", "concepts", "question", "exemplars", "responses", "output_instructions"};

struct PromptTemplate {
  std::string template_id;
  int version = 1;
  std::string role_preamble;
  std::string body;
  std::int64_t token_budget = 6000;

  // Throws kTemplateInvalid.
  void validate() const;
  bool operator==(const PromptTemplate&) const = default;
};

PromptTemplate parse_template(std::string_view text);
std::string format_template(const PromptTemplate& tmpl);
const PromptTemplate& default_template();

// Holds the template versions known for each id; versions only move forward.
class TemplateRegistry {
 public:
  // Throws kTemplateInvalid when `tmpl` does not advance its id's version
  // (re-adding an identical template is a no-op).
  void add(PromptTemplate tmpl);
  // Latest version. Throws kNotFound.
  const PromptTemplate& latest(std::string_view template_id) const;
  std::vector<std::string> ids() const;

  // Loads every *.tmpl file under `dir` (if it exists).
  void load_directory(const std::filesystem::path& dir);

 private:
  std::map<std::string, std::map<int, PromptTemplate>, std::less<>> templates_;
};

// ---------------------------------------------------------------------------
// Prompt assembly

// Rough token estimate: ceil(chars / 4).
std::int64_t estimate_tokens(std::string_view text);

struct SectionedResponse {
  std::string section;
  std::string text;
};

struct PromptOptions {
  std::uint64_t seed = 0;
  bool include_prescriptive = false;
};

struct AssembledPrompt {
  std::string text;
  std::int64_t estimated_tokens = 0;
  std::int64_t total_responses = 0;
  std::int64_t included_responses = 0;
  std::map<std::string, std::int64_t> included_per_section;
  bool subsampled() const { return included_responses < total_responses; }
};

// Empty answers are skipped. When the whole prompt would exceed the
// template's token budget, responses are subsampled per section in
// proportion to section size (largest-remainder apportionment, seeded pick
// within each section).
AssembledPrompt assemble_prompt(const Question& question,
                                std::span<const SectionedResponse> responses,
                                const CurriculumContext& ctx, const PromptTemplate& tmpl,
                                const std::vector<std::string>& exemplars,
                                const PromptOptions& options = {});

AssembledPrompt assemble_prompt(const Question& question, const std::vector<std::string>& responses,
                                const CurriculumContext& ctx, const PromptTemplate& tmpl,
                                const std::vector<std::string>& exemplars,
                                const PromptOptions& options = {});

// Largest-remainder apportionment of `total` across `sizes`.
std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<std::int64_t>& sizes);

std::string output_instructions(bool include_prescriptive);

// ---------------------------------------------------------------------------
// Reports

inline constexpr std::string_view kPrescriptiveFlag = "not grounded in response data";

struct Misconception {
  std::string claim;
  std::vector<std::string> evidence;
  bool operator==(const Misconception&) const = default;
};

struct Provenance {
  std::string template_id;
  int version = 0;
  std::string provider_id;
  std::string model_id;
  std::string generated_at;
  bool operator==(const Provenance&) const = default;
};

struct InsightReport {
  std::string question_id;
  std::optional<std::string> section_filter;
  std::string summary;
  std::vector<std::string> understanding_themes;
  std::vector<Misconception> misconceptions;
  std::vector<std::string> vocabulary_issues;
  // Serialized together with kPrescriptiveFlag; never merged into the
  // descriptive fields.
  std::optional<std::vector<std::string>> prescriptive_suggestions;
  Provenance provenance;

  bool operator==(const InsightReport&) const = default;
};

Json to_json(const InsightReport& report);
InsightReport insight_report_from_json(const Json& j);

// Extracts the fenced ```json block (or a bare JSON object) from a model
// completion. Fills only the model-authored fields. Throws
// kUnparseableCompletion.
InsightReport parse_completion(std::string_view completion);

struct GenerationMeta {
  std::string question_id;
  std::optional<std::string> section_filter;
  std::string template_id;
  int template_version = 0;
  bool include_prescriptive = false;
};

// One reformat retry with a schema reminder appended on parse failure.
InsightReport generate_insights(const std::string& prompt, Provider& provider,
                                const GenerationMeta& meta);

// ---------------------------------------------------------------------------
// Grounding and scope

struct DroppedClaim {
  std::string claim;
  std::string reason;
  bool operator==(const DroppedClaim&) const = default;
};

struct ScopeFlag {
  std::string term;
  std::string location;  // e.g. "summary", "misconceptions[1].claim"
  std::size_t offset = 0;
  bool operator==(const ScopeFlag&) const = default;
};

struct GroundingCoverage {
  std::int64_t fragments_total = 0;
  std::int64_t fragments_kept = 0;
  bool operator==(const GroundingCoverage&) const = default;
};

struct GroundedReport {
  InsightReport report;
  std::vector<DroppedClaim> dropped;
  std::vector<ScopeFlag> scope_flags;
  GroundingCoverage coverage;

  bool operator==(const GroundedReport&) const = default;
};

inline constexpr std::string_view kUngroundedReason = "ungrounded";

// An evidence fragment survives iff its normalized form is a substring of
// some normalized response.
GroundedReport ground_check(const InsightReport& report, const std::vector<std::string>& responses);

// Case-insensitive, word-bounded occurrences of out-of-scope markers in the
// summary, themes, misconception claims, vocabulary notes and suggestions.
// Student evidence quotes are data and are not scanned.
std::vector<ScopeFlag> scope_check(const InsightReport& report, const CurriculumContext& ctx);

Json to_json(const GroundedReport& report);
GroundedReport grounded_report_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Caching and the full pipeline

struct CacheKey {
  std::string assessment_id;
  std::string question_id;
  std::optional<std::string> section_filter;
  std::string template_id;
  int template_version = 0;
  std::string provider_id;
  std::string model_id;
  bool include_prescriptive = false;

  std::string digest() const;
};

// Disk cache of grounded reports. Concurrent readers, exclusive writers.
class InsightCache {
 public:
  explicit InsightCache(std::filesystem::path dir);

  std::optional<GroundedReport> get(const CacheKey& key) const;
  void put(const CacheKey& key, const GroundedReport& report);

  // A hit returns the stored report; a miss (or an unreadable entry, which
  // logs a warning) runs `compute` and stores its result.
  GroundedReport get_or_compute(const CacheKey& key,
                                const std::function<GroundedReport()>& compute);

  std::filesystem::path path_for(const CacheKey& key) const;

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  // Concurrent identical misses share one computation.
  std::mutex inflight_mutex_;
  std::map<std::string, std::shared_future<GroundedReport>> inflight_;
};

struct InsightRequest {
  std::string question_id;
  std::optional<std::string> section;
  bool include_prescriptive = false;
  std::uint64_t seed = 0;
};

// assemble -> generate -> ground -> scope, without caching.
GroundedReport run_insight_pipeline(const Assessment& assessment, const InsightRequest& request,
                                    const CurriculumContext& ctx, const PromptTemplate& tmpl,
                                    Provider& provider);

// Prompt that run_insight_pipeline would send.
AssembledPrompt prompt_for(const Assessment& assessment, const InsightRequest& request,
                           const CurriculumContext& ctx, const PromptTemplate& tmpl);

CacheKey cache_key_for(const Assessment& assessment, const InsightRequest& request,
                       const PromptTemplate& tmpl, const Provider& provider);

GroundedReport cached_insights(InsightCache& cache, const Assessment& assessment,
                               const InsightRequest& request, const CurriculumContext& ctx,
                               const PromptTemplate& tmpl, Provider& provider);

}  // namespace classlens

#endif  // CLASSLENS_INSIGHTS_HPP_
