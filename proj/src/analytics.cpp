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

#include "classlens/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <unordered_set>

#include "classlens/error.hpp"

namespace classlens {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Folds U+2019 (right single quotation mark) to an ASCII apostrophe.
std::string fold_apostrophes(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.compare(i, 3, "\xE2\x80\x99") == 0) {
      out.push_back('\'');
      i += 2;
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> normalize_text(std::string_view input) {
  const std::string raw = fold_apostrophes(input);
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto c = static_cast<unsigned char>(raw[i]);
    if (is_space_byte(c)) {
      flush();
    } else if (is_word_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (c == '\'' || c == '-') {
      bool prev_word = i > 0 && is_word_byte(static_cast<unsigned char>(raw[i - 1]));
      bool next_word = i + 1 < raw.size() && is_word_byte(static_cast<unsigned char>(raw[i + 1]));
      if (prev_word && next_word) current.push_back(static_cast<char>(c));
    }
    // Other punctuation is dropped without splitting the token.
  }
  flush();
  return tokens;
}

std::string normalized_form(std::string_view raw) {
  std::string out;
  for (const auto& t : normalize_text(raw)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

StopwordSet parse_stopwords(std::string_view text) {
  StopwordSet out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string word = to_lower(trim(line));
    if (!word.empty()) out.insert(std::move(word));
  }
  return out;
}

StopwordSet without_terms(StopwordSet stopwords, const std::set<std::string>& protected_terms) {
  for (const auto& term : protected_terms) {
    auto tokens = normalize_text(term);
    // Multi-word terms never surface as single cloud tokens, and their
    // connectives ("of", "and") must stay filtered.
    if (tokens.size() == 1) stopwords.erase(tokens.front());
  }
  return stopwords;
}

FrequencyProfile term_frequencies(const std::vector<std::string>& responses,
                                  const StopwordSet& stopwords) {
  FrequencyProfile profile;
  std::map<std::string, std::int64_t> counts;
  for (const auto& r : responses) {
    for (auto& token : normalize_text(r)) {
      ++profile.total_tokens;
      if (stopwords.count(token) == 0) ++counts[std::move(token)];
    }
  }
  profile.terms.reserve(counts.size());
  for (auto& [term, count] : counts) profile.terms.push_back({term, count});
  // std::map iteration is already lexicographic; a stable sort on count keeps it as the tie-break.
  std::stable_sort(profile.terms.begin(), profile.terms.end(),
                   [](const TermCount& a, const TermCount& b) { return a.count > b.count; });
  return profile;
}

std::int64_t ChoiceDistribution::count(std::string_view option) const {
  for (const auto& [name, n] : counts) {
    if (name == option) return n;
  }
  return 0;
}

ChoiceDistribution choice_distribution(const Question& question,
                                       const std::vector<std::string>& responses,
                                       std::string_view delimiter) {
  if (question.kind == QuestionKind::kOpenEnded) {
    throw Error(ErrorCode::kWrongQuestionKind,
                "choice distribution requested for open-ended question " + question.question_id);
  }
  ChoiceDistribution dist;
  dist.question_id = question.question_id;
  std::map<std::string, std::size_t, std::less<>> slot;
  if (question.options) {
    for (const auto& opt : *question.options) {
      if (slot.emplace(opt, dist.counts.size()).second) dist.counts.emplace_back(opt, 0);
    }
  }
  const std::size_t other = dist.counts.size();
  dist.counts.emplace_back(std::string(kOtherOption), 0);

  auto tally = [&](const std::string& value) {
    auto it = slot.find(value);
    ++dist.counts[it == slot.end() ? other : it->second].second;
  };

  for (const auto& raw : responses) {
    std::string answer = trim(raw);
    if (answer.empty()) continue;
    ++dist.respondents;
    if (question.kind == QuestionKind::kSingleChoice) {
      tally(answer);
      continue;
    }
    std::set<std::string> picked;
    std::size_t start = 0;
    while (true) {
      std::size_t pos = answer.find(delimiter, start);
      std::string part = trim(std::string_view(answer).substr(
          start, pos == std::string::npos ? std::string::npos : pos - start));
      if (!part.empty()) picked.insert(std::move(part));
      if (pos == std::string::npos) break;
      start = pos + delimiter.size();
    }
    for (const auto& p : picked) tally(p);
  }
  return dist;
}

std::vector<std::string> unique_responses(const std::vector<std::string>& responses) {
  std::vector<std::string> unique;
  std::unordered_set<std::string> seen;
  for (const auto& r : responses) {
    std::string key = normalized_form(r);
    if (key.empty()) continue;
    if (seen.insert(std::move(key)).second) unique.push_back(r);
  }
  return unique;
}

SamplePage sample_unique_responses(const std::vector<std::string>& responses,
                                   std::int64_t page_size, std::uint64_t seed,
                                   std::int64_t cursor) {
  if (page_size < 1) throw Error(ErrorCode::kInvalidArgument, "page_size must be at least 1");
  if (cursor < 0) throw Error(ErrorCode::kInvalidArgument, "cursor must be non-negative");
  SamplePage page;
  page.seed = seed;
  page.cursor = cursor;
  page.page_size = page_size;

  auto unique = unique_responses(responses);
  SeededRng rng(seed);
  rng.shuffle(unique);
  page.total_unique = static_cast<std::int64_t>(unique.size());
  for (std::int64_t i = cursor; i < page.total_unique && i < cursor + page_size; ++i) {
    page.items.push_back(unique[static_cast<std::size_t>(i)]);
  }
  return page;
}

std::vector<StudentResponse> section_filter(const Assessment& assessment,
                                            const std::optional<std::string>& section) {
  if (!section) return assessment.responses;
  if (assessment.sections.count(*section) == 0) {
    throw Error(ErrorCode::kUnknownSection, "unknown section '" + *section + "'");
  }
  std::vector<StudentResponse> out;
  std::copy_if(assessment.responses.begin(), assessment.responses.end(), std::back_inserter(out),
               [&](const StudentResponse& r) { return r.section == *section; });
  return out;
}

std::vector<std::string> answers_for(const std::vector<StudentResponse>& responses,
                                     std::string_view question_id) {
  std::vector<std::string> out;
  out.reserve(responses.size());
  for (const auto& r : responses) {
    auto it = r.answers.find(std::string(question_id));
    out.push_back(it == r.answers.end() ? std::string() : it->second);
  }
  return out;
}

AnswerSplit split_non_responses(const std::vector<std::string>& answers) {
  AnswerSplit split;
  for (const auto& a : answers) {
    if (trim(a).empty()) {
      ++split.non_responses;
    } else {
      split.answered.push_back(a);
    }
  }
  return split;
}

namespace {

Json optional_string(const std::optional<std::string>& s) {
  return s ? Json(*s) : Json(nullptr);
}

}  // namespace

Json to_json(const FrequencyProfile& p) {
  Json j;
  j["question_id"] = p.question_id;
  j["section_filter"] = optional_string(p.section_filter);
  Json terms = Json::array();
  for (const auto& t : p.terms) terms.push_back(Json{{"term", t.term}, {"count", t.count}});
  j["terms"] = std::move(terms);
  j["total_tokens"] = p.total_tokens;
  return j;
}

Json to_json(const ChoiceDistribution& d) {
  Json j;
  j["question_id"] = d.question_id;
  j["section_filter"] = optional_string(d.section_filter);
  Json counts = Json::object();
  for (const auto& [opt, n] : d.counts) counts[opt] = n;
  j["counts"] = std::move(counts);
  j["respondents"] = d.respondents;
  return j;
}

Json to_json(const SamplePage& p) {
  Json j;
  j["question_id"] = p.question_id;
  j["section_filter"] = optional_string(p.section_filter);
  j["seed"] = p.seed;
  j["cursor"] = p.cursor;
  j["page_size"] = p.page_size;
  j["items"] = p.items;
  j["total_unique"] = p.total_unique;
  return j;
}

}  // namespace classlens
