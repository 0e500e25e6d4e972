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

// Shared helpers for the unit tests: scratch directories, sample data and
// small independent oracles.
#ifndef CLASSLENS_TEST_SUPPORT_HPP_
#define CLASSLENS_TEST_SUPPORT_HPP_

#include <atomic>
#include <cctype>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "classlens/util.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(CLASSLENS_DATA_DIR); }
inline fs::path sample_dir() { return data_dir() / "sample"; }
inline fs::path fixture_dir() { return data_dir() / "fixtures" / "stub"; }

inline std::string sample_csv() { return classlens::read_file(sample_dir() / "checkin-lesson1.csv"); }
inline std::string sample_manifest() {
  return classlens::read_file(sample_dir() / "checkin-lesson1.manifest.json");
}

class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("classlens-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Straightforward RFC-4180 scanner, written independently of the library's
// reader: one pass, a quote flag, and nothing else.
inline std::vector<std::vector<std::string>> naive_csv(std::string text) {
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(field);
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(field);
      field.clear();
      rows.push_back(row);
      row.clear();
    } else {
      field += c;
    }
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

// Oracle tokenizer: lowercase letters/digits/non-ASCII bytes form words;
// an apostrophe or hyphen survives only with word characters on both sides;
// whitespace splits; anything else vanishes.
inline std::vector<std::string> oracle_tokens(const std::string& s) {
  std::string folded;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.compare(i, 3, "\xE2\x80\x99") == 0) {
      folded += '\'';
      i += 2;
    } else {
      folded += s[i];
    }
  }
  auto word = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
  std::string cleaned;
  for (std::size_t i = 0; i < folded.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(folded[i]);
    if (std::isspace(c)) {
      cleaned += ' ';
    } else if (word(c)) {
      cleaned += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if ((c == '\'' || c == '-') && i > 0 && i + 1 < folded.size() &&
               word(static_cast<unsigned char>(folded[i - 1])) &&
               word(static_cast<unsigned char>(folded[i + 1]))) {
      cleaned += static_cast<char>(c);
    }
  }
  std::vector<std::string> out;
  std::string cur;
  for (char c : cleaned + " ") {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

inline std::string oracle_normalized(const std::string& s) {
  std::string out;
  for (const auto& t : oracle_tokens(s)) out += (out.empty() ? "" : " ") + t;
  return out;
}

// Random short "student answers" over a small vocabulary with punctuation,
// case noise, duplicates and blanks.
inline std::vector<std::string> random_responses(std::mt19937_64& rng, int max_count = 40) {
  static const std::vector<std::string> words = {
      "water", "Runoff", "flows", "over", "the", "ground", "absorps", "soil", "is", "a",
      "grass", "concrete", "doesn't", "rain-fall", "seps", "into", "and", "it", "Absorption",
      "caf\xC3\xA9", "storm", "drain", "x"};
  static const std::vector<std::string> punct = {"", "", "", ",", ".", "!", "?", "'", "-", ";"};
  std::uniform_int_distribution<int> count_dist(0, max_count);
  std::uniform_int_distribution<int> len_dist(0, 9);
  std::uniform_int_distribution<std::size_t> word_dist(0, words.size() - 1);
  std::uniform_int_distribution<std::size_t> punct_dist(0, punct.size() - 1);
  std::vector<std::string> out;
  int n = count_dist(rng);
  for (int i = 0; i < n; ++i) {
    if (!out.empty() && rng() % 5 == 0) {
      out.push_back(out[rng() % out.size()]);
      continue;
    }
    std::string s;
    int len = len_dist(rng);
    for (int w = 0; w < len; ++w) {
      if (w) s += (rng() % 7 == 0) ? "  " : " ";
      s += words[word_dist(rng)] + punct[punct_dist(rng)];
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace testing

#endif  // CLASSLENS_TEST_SUPPORT_HPP_
