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

#ifndef CLASSLENS_ANALYTICS_HPP_
#define CLASSLENS_ANALYTICS_HPP_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "classlens/ingest.hpp"
#include "classlens/json.hpp"

namespace classlens {

// Lowercases, strips punctuation (apostrophes and hyphens survive between
// word characters), splits on whitespace. Non-ASCII bytes count as word
// characters; a typographic apostrophe is folded to '.
std::vector<std::string> normalize_text(std::string_view raw);

// normalize_text joined by single spaces. Used for dedup and grounding.
std::string normalized_form(std::string_view raw);

using StopwordSet = std::set<std::string, std::less<>>;

// The shipped 175-word English list.
const StopwordSet& default_stopwords();

// One lowercase token per line; '#' starts a comment.
StopwordSet parse_stopwords(std::string_view text);

// Removes every single-word curriculum term from `stopwords`.
StopwordSet without_terms(StopwordSet stopwords, const std::set<std::string>& protected_terms);

struct TermCount {
  std::string term;
  std::int64_t count = 0;

  bool operator==(const TermCount&) const = default;
};

struct FrequencyProfile {
  std::string question_id;
  std::optional<std::string> section_filter;
  // Descending by count, then ascending by term.
  std::vector<TermCount> terms;
  // Every normalized token, stopwords included.
  std::int64_t total_tokens = 0;

  bool operator==(const FrequencyProfile&) const = default;
};

FrequencyProfile term_frequencies(const std::vector<std::string>& responses,
                                  const StopwordSet& stopwords);

inline constexpr std::string_view kOtherOption = "other";

struct ChoiceDistribution {
  std::string question_id;
  std::optional<std::string> section_filter;
  // Question options in declared order followed by "other".
  std::vector<std::pair<std::string, std::int64_t>> counts;
  std::int64_t respondents = 0;

  std::int64_t count(std::string_view option) const;
  bool operator==(const ChoiceDistribution&) const = default;
};

// Throws kWrongQuestionKind for open-ended questions.
ChoiceDistribution choice_distribution(const Question& question,
                                       const std::vector<std::string>& responses,
                                       std::string_view delimiter = kDefaultDelimiter);

inline constexpr std::int64_t kDefaultPageSize = 5;

struct SamplePage {
  std::string question_id;
  std::optional<std::string> section_filter;
  std::uint64_t seed = 0;
  std::int64_t cursor = 0;
  std::int64_t page_size = kDefaultPageSize;
  std::vector<std::string> items;
  std::int64_t total_unique = 0;

  bool operator==(const SamplePage&) const = default;
};

// Unique set under normalized_form, first raw spelling kept, empty answers
// dropped. Order is the input order.
std::vector<std::string> unique_responses(const std::vector<std::string>& responses);

SamplePage sample_unique_responses(const std::vector<std::string>& responses,
                                   std::int64_t page_size, std::uint64_t seed,
                                   std::int64_t cursor);

// Throws kUnknownSection when `section` is not one of the assessment's.
std::vector<StudentResponse> section_filter(const Assessment& assessment,
                                            const std::optional<std::string>& section);

// Raw answers to one question, in response order, empty answers included.
std::vector<std::string> answers_for(const std::vector<StudentResponse>& responses,
                                     std::string_view question_id);

// Drops empty answers and reports how many there were.
struct AnswerSplit {
  std::vector<std::string> answered;
  std::int64_t non_responses = 0;
};
AnswerSplit split_non_responses(const std::vector<std::string>& answers);

Json to_json(const FrequencyProfile& profile);
Json to_json(const ChoiceDistribution& distribution);
Json to_json(const SamplePage& page);

}  // namespace classlens

#endif  // CLASSLENS_ANALYTICS_HPP_
