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

// Acceptance suite. Each criterion prints one PASS/FAIL line with its
// runtime; the process exits non-zero when any criterion fails.
#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "classlens/analytics.hpp"
#include "classlens/api.hpp"
#include "classlens/ingest.hpp"
#include "classlens/insights.hpp"
#include "classlens/store.hpp"
#include "classlens/wordcloud.hpp"

using namespace classlens;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CLASSLENS_DATA_DIR;
const fs::path kSample = kData / "sample";
const fs::path kFixtures = kData / "fixtures" / "stub";

// Collects failures without aborting the criterion, so the summary line can
// say what went wrong.
struct Outcome {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Criterion {
  std::string name;
  std::optional<double> limit_seconds;
  std::function<void(Outcome&)> run;
};

class Scratch {
 public:
  explicit Scratch(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("classlens-acceptance-" + std::to_string(::getpid()) + "-" + tag);
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string sample_csv() { return read_file(kSample / "checkin-lesson1.csv"); }
std::string sample_manifest_text() { return read_file(kSample / "checkin-lesson1.manifest.json"); }
AssessmentManifest sample_manifest() { return manifest_from_json(Json::parse(sample_manifest_text())); }

// Plain RFC-4180 row scan, independent of the library reader.
std::vector<std::vector<std::string>> naive_rows(const std::string& text) {
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
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
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

// Brute-force tokenizer: lowercase word characters, keep ' and - only
// between word characters, drop other punctuation, split on whitespace.
std::vector<std::string> oracle_tokens(const std::string& raw) {
  std::string s;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.compare(i, 3, "\xE2\x80\x99") == 0) {
      s += '\'';
      i += 2;
    } else {
      s += raw[i];
    }
  }
  auto word = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    unsigned char c = i < s.size() ? static_cast<unsigned char>(s[i]) : ' ';
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (word(c)) {
      cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if ((c == '\'' || c == '-') && i > 0 && i + 1 < s.size() &&
               word(static_cast<unsigned char>(s[i - 1])) && word(static_cast<unsigned char>(s[i + 1]))) {
      cur += static_cast<char>(c);
    }
  }
  return out;
}

std::string oracle_normalized(const std::string& s) {
  std::string out;
  for (const auto& t : oracle_tokens(s)) out += (out.empty() ? "" : " ") + t;
  return out;
}

std::vector<std::string> random_answers(std::mt19937_64& rng, int max_count) {
  static const std::vector<std::string> words{
      "Water", "runoff", "flows", "over", "the", "ground", "absorps", "soil", "is", "a", "grass",
      "concrete", "doesn't", "rain-fall", "seps", "into", "and", "it", "Absorption", "caf\xC3\xA9",
      "storm", "drain", "x", "doesn\xE2\x80\x99t"};
  static const std::vector<std::string> punct{"", "", "", ",", ".", "!", "?", "'", "-", ";", "--"};
  std::vector<std::string> out;
  const int n = static_cast<int>(rng() % (max_count + 1));
  for (int i = 0; i < n; ++i) {
    if (!out.empty() && rng() % 5 == 0) {
      out.push_back(out[rng() % out.size()]);
      continue;
    }
    std::string s;
    for (int w = 0, len = static_cast<int>(rng() % 12); w < len; ++w) {
      if (w) s += rng() % 6 == 0 ? "  " : " ";
      s += words[rng() % words.size()] + punct[rng() % punct.size()];
    }
    out.push_back(s);
  }
  return out;
}

std::vector<std::string> raw_student_names() {
  auto rows = naive_rows(sample_csv());
  std::size_t col = std::find(rows[0].begin(), rows[0].end(), "Name") - rows[0].begin();
  std::vector<std::string> names;
  for (std::size_t i = 1; i < rows.size(); ++i) names.push_back(rows[i][col]);
  return names;
}

// A name can hide behind JSON or HTML escaping, so each spelling is checked.
std::vector<std::string> name_spellings(const std::string& name) {
  std::string json = Json(name).dump();
  std::string html;
  for (char c : name) {
    if (c == '\'') {
      html += "&#39;";
    } else if (c == '"') {
      html += "&quot;";
    } else if (c == '&') {
      html += "&amp;";
    } else {
      html += c;
    }
  }
  std::string html_hex = name;
  for (std::size_t pos; (pos = html_hex.find('\'')) != std::string::npos;) html_hex.replace(pos, 1, "&#x27;");
  return {name, json.substr(1, json.size() - 2), html, html_hex};
}

std::size_t count_leaks(const std::string& text, const std::vector<std::string>& names,
                        std::set<std::string>& leaked) {
  std::size_t n = 0;
  for (const auto& name : names) {
    for (const auto& spelling : name_spellings(name)) {
      if (text.find(spelling) != std::string::npos) {
        leaked.insert(name);
        ++n;
      }
    }
  }
  return n;
}

void check_layout(const CloudLayout& l, Outcome& o, int trial) {
  const auto& c = l.config;
  for (std::size_t i = 0; i < l.placed.size(); ++i) {
    const auto& a = l.placed[i];
    if (a.x < 0 || a.y < 0 || a.x + a.width > c.canvas_width || a.y + a.height > c.canvas_height) {
      o.expect(false, "trial " + std::to_string(trial) + ": '" + a.term + "' out of bounds");
    }
    for (std::size_t j = i + 1; j < l.placed.size(); ++j) {
      const auto& b = l.placed[j];
      bool apart = a.x + a.width <= b.x || b.x + b.width <= a.x || a.y + a.height <= b.y ||
                   b.y + b.height <= a.y;
      if (!apart) o.expect(false, "trial " + std::to_string(trial) + ": '" + a.term + "' overlaps '" + b.term + "'");
    }
  }
}

// ---------------------------------------------------------------------------

void ingestion_oracle(Outcome& o) {
  const std::string csv = sample_csv();
  auto manifest = sample_manifest();
  auto a = parse_export(csv, manifest);
  using Triple = std::tuple<std::string, std::string, std::string>;
  std::multiset<Triple> got, want;
  for (const auto& r : a.responses) {
    for (const auto& [qid, answer] : r.answers) {
      const Question* q = a.find_question(qid);
      got.insert({r.section, q ? q->text : "?", answer});
    }
  }
  auto rows = naive_rows(csv);
  const auto& header = rows[0];
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    for (const auto& mq : manifest.questions) {
      want.insert({rows[r][col.at(manifest.section_column)], mq.column_header, rows[r][col.at(mq.column_header)]});
    }
  }
  o.expect(rows.size() - 1 == a.responses.size(), "row count differs from the naive scan");
  o.expect(got == want, "(section, question, answer) multiset differs from the naive scan");

  auto pseudo = pseudonymize(a, "acceptance-salt");
  o.expect(assessment_from_json(to_json(pseudo)) == pseudo, "JSON round trip is not structurally equal");
  auto again = parse_export(to_csv(a), manifest);
  again.ingested_at = a.ingested_at;
  o.expect(again == a, "CSV re-export and re-ingest is not structurally equal");
}

void frequency_conservation(Outcome& o) {
  std::mt19937_64 rng(20260101);
  const auto stop = without_terms(default_stopwords(), sample_curriculum().topic_lexicon);
  for (int trial = 0; trial < 100; ++trial) {
    auto responses = random_answers(rng, 80);
    auto profile = term_frequencies(responses, stop);
    std::map<std::string, std::int64_t> want;
    std::int64_t tokens = 0;
    for (const auto& r : responses) {
      for (const auto& t : oracle_tokens(r)) {
        ++tokens;
        if (!stop.count(t)) ++want[t];
      }
    }
    std::map<std::string, std::int64_t> got;
    for (const auto& t : profile.terms) got[t.term] += t.count;
    o.expect(got == want, "trial " + std::to_string(trial) + ": term counts differ");
    o.expect(profile.total_tokens == tokens, "trial " + std::to_string(trial) + ": total_tokens differs");
  }
}

void sampling_partition(Outcome& o) {
  std::mt19937_64 rng(20260102);
  o.expect(kDefaultPageSize == 5, "default page size is not 5");
  for (int trial = 0; trial < 200; ++trial) {
    auto responses = random_answers(rng, 60);
    const std::uint64_t seed = rng();
    std::set<std::string> dedup;
    for (const auto& r : responses) {
      auto n = oracle_normalized(r);
      if (!n.empty()) dedup.insert(n);
    }
    std::set<std::string> seen;
    for (std::int64_t cursor = 0; cursor <= static_cast<std::int64_t>(responses.size()) + 5;
         cursor += kDefaultPageSize) {
      auto page = sample_unique_responses(responses, kDefaultPageSize, seed, cursor);
      o.expect(page.items.size() <= 5, "page larger than 5");
      for (const auto& item : page.items) {
        o.expect(seen.insert(oracle_normalized(item)).second, "trial " + std::to_string(trial) + ": pages overlap");
      }
      auto repeat = sample_unique_responses(responses, kDefaultPageSize, seed, cursor);
      o.expect(repeat.items == page.items, "same seed gave a different page");
    }
    o.expect(seen == dedup, "trial " + std::to_string(trial) + ": union of pages differs from the dedup set");
  }
}

void cloud_geometry(Outcome& o) {
  std::mt19937_64 rng(20260103);
  const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  for (int trial = 0; trial < 200; ++trial) {
    std::set<std::string> terms;
    const int n = static_cast<int>(1 + rng() % 50);
    while (static_cast<int>(terms.size()) < n) {
      std::string t;
      for (int k = 0, len = static_cast<int>(3 + rng() % 10); k < len; ++k) t += letters[rng() % letters.size()];
      terms.insert(t);
    }
    FrequencyProfile p;
    for (const auto& t : terms) p.terms.push_back({t, static_cast<std::int64_t>(1 + rng() % 100)});
    std::sort(p.terms.begin(), p.terms.end(), [](const TermCount& a, const TermCount& b) {
      return a.count != b.count ? a.count > b.count : a.term < b.term;
    });
    CloudConfig config;  // 800x600
    config.seed = rng();
    auto layout = layout_cloud(p, config);
    o.expect(config.canvas_width == 800 && config.canvas_height == 600, "default canvas is not 800x600");
    o.expect(layout.placed.size() + layout.dropped_terms.size() == p.terms.size(),
             "placed + dropped does not cover every term");
    check_layout(layout, o, trial);
    o.expect(to_json(layout).dump() == to_json(layout_cloud(p, config)).dump(),
             "trial " + std::to_string(trial) + ": identical inputs gave different layouts");
  }
}

void grounding_soundness(Outcome& o) {
  auto a = parse_export(sample_csv(), sample_manifest());
  const std::string qid = question_id_for("In your own words, what is absorption?");
  auto answers = split_non_responses(answers_for(a.responses, qid)).answered;
  InsightReport r;
  r.question_id = qid;
  r.summary = "Fixture report.";
  r.misconceptions = {
      {"Confuses absorption with light energy", {"Absorption is when the electrons absorb energy from light."}},
      {"Treats absorption as any object taking in water", {"absorption is when something takes in water"}},
      {"Misspells absorption", {"ABSORBTION is when water goes in the dirt!"}},
      {"Thinks absorbed water vanishes", {"the water just disappears forever"}},
      {"Thinks rain is made by the ocean", {"rain comes straight out of the ocean"}},
  };
  auto g = ground_check(r, answers);
  o.expect(g.report.misconceptions.size() == 3, "expected 3 kept claims, got " +
                                                    std::to_string(g.report.misconceptions.size()));
  o.expect(g.dropped.size() == 2, "expected 2 dropped claims, got " + std::to_string(g.dropped.size()));
  std::set<std::string> kept;
  for (const auto& m : g.report.misconceptions) kept.insert(m.claim);
  o.expect(kept == std::set<std::string>{r.misconceptions[0].claim, r.misconceptions[1].claim,
                                         r.misconceptions[2].claim},
           "the wrong claims were kept");
  for (const auto& d : g.dropped) o.expect(d.reason == "ungrounded", "dropped claim without reason");
}

void scope_check_criterion(Outcome& o) {
  const auto& ctx = sample_curriculum();
  InsightReport off;
  off.summary = "Students connect runoff to the water cycle.";
  off.understanding_themes = {"Rain is part of the Water Cycle"};
  off.misconceptions = {{"Some think runoff is absorbed", {"x"}}};
  auto flags = scope_check(off, ctx);
  o.expect(flags.size() == 2, "expected 2 flags, got " + std::to_string(flags.size()));
  for (const auto& f : flags) o.expect(f.term == "water cycle", "unexpected flag term " + f.term);

  InsightReport in;
  in.summary = "Students describe runoff as rainfall minus absorption on impermeable surfaces.";
  in.understanding_themes = {"Surface material changes runoff"};
  in.vocabulary_issues = {"absorps for absorbs"};
  o.expect(scope_check(in, ctx).empty(), "in-scope report was flagged");
}

void cache_contract(Outcome& o) {
  Scratch dir("cache");
  ServiceConfig config;
  config.store_root = dir.path();
  config.salt = "acceptance-salt";
  auto provider = std::make_unique<StubProvider>(kFixtures);
  auto* stub = provider.get();
  Service svc(config, std::move(provider));
  auto ing = svc.ingest(sample_csv(), sample_manifest_text());
  o.expect(ing.status == 201, "ingest failed");
  const std::string qid = question_id_for("In your own words, what is absorption?");
  auto first = svc.insights("checkin-lesson1", qid, Json::object());
  auto second = svc.insights("checkin-lesson1", qid, Json::object());
  o.expect(first.status == 200 && second.status == 200, "insight requests failed");
  o.expect(stub->call_count() == 1, "two identical requests made " + std::to_string(stub->call_count()) + " calls");
  o.expect(first.body == second.body, "cached report differs");

  auto bumped = default_template();
  bumped.version += 1;
  svc.store().put_template(bumped);
  auto third = svc.insights("checkin-lesson1", qid, Json::object());
  o.expect(third.status == 200, "request after the version bump failed");
  o.expect(stub->call_count() == 2, "version bump gave " + std::to_string(stub->call_count()) + " calls in total");
  o.expect(third.body["report"]["provenance"]["version"] == bumped.version, "provenance lacks the new version");
}

void privacy_scan(Outcome& o) {
  Scratch dir("privacy");
  ServiceConfig config;
  config.store_root = dir.path();
  Service svc(config, std::make_unique<StubProvider>(kFixtures));
  const auto names = raw_student_names();
  std::set<std::string> leaked;
  std::size_t leaks = 0;
  std::size_t payloads = 0;
  auto scan = [&](const std::string& text) {
    ++payloads;
    leaks += count_leaks(text, names, leaked);
  };

  auto ing = svc.ingest(sample_csv(), sample_manifest_text());
  o.expect(ing.status == 201, "ingest failed");
  scan(ing.body.dump());
  scan(svc.list_assessments().body.dump());
  scan(svc.get_assessment("checkin-lesson1").body.dump());
  auto a = svc.load_assessment("checkin-lesson1");
  for (const auto& q : a.questions) {
    scan(svc.analytics("checkin-lesson1", q.question_id, std::nullopt).body.dump());
    for (const auto& s : a.sections) scan(svc.analytics("checkin-lesson1", q.question_id, s).body.dump());
    for (std::int64_t cursor = 0; cursor < 120; cursor += 5) {
      scan(svc.samples("checkin-lesson1", q.question_id, std::nullopt, 1, cursor, 5).body.dump());
    }
    scan(svc.insights("checkin-lesson1", q.question_id, Json::object()).body.dump());
    scan(svc.insights("checkin-lesson1", q.question_id, Json{{"include_prescriptive", true}}).body.dump());
    for (const auto& s : a.sections) {
      scan(prompt_for(a, {q.question_id, s}, svc.curriculum(), default_template()).text);
    }
    scan(prompt_for(a, {q.question_id}, svc.curriculum(), default_template()).text);
  }
  Scratch out("privacy-report");
  svc.export_report("checkin-lesson1", out.path());
  for (const auto* root : {&dir.path(), &out.path()}) {
    for (const auto& e : fs::recursive_directory_iterator(*root)) {
      if (e.is_regular_file()) scan(read_file(e.path()));
    }
  }
  o.expect(names.size() == 100, "expected 100 names in the sample export");
  o.expect(payloads > 100, "scanned too few payloads");
  std::string list;
  for (const auto& n : leaked) list += (list.empty() ? "" : "; ") + n;
  o.expect(leaks == 0, std::to_string(leaks) + " raw-name occurrences (" + list + ")");
}

int run(const std::string& command) {
  int rc = std::system(command.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

void end_to_end(Outcome& o) {
  // Any configured endpoint is removed so a network call cannot succeed.
  ::unsetenv("INSIGHT_API_BASE_URL");
  ::unsetenv("INSIGHT_API_KEY");
  ::setenv("http_proxy", "http://127.0.0.1:9", 1);
  ::setenv("https_proxy", "http://127.0.0.1:9", 1);
  Scratch dir("e2e");
  const fs::path store = dir.path() / "store";
  const fs::path report = dir.path() / "report";
  const std::string cli = quoted(CLASSLENS_CLI) + " --store " + quoted(store) + " --fixtures " + quoted(kFixtures);
  const std::string log = " >>" + quoted(dir.path() / "log.txt") + " 2>&1";

  o.expect(run(cli + " ingest " + quoted(kSample / "checkin-lesson1.csv") + " --manifest " +
               quoted(kSample / "checkin-lesson1.manifest.json") + log) == 0, "ingest failed");
  o.expect(run(cli + " analyze checkin-lesson1" + log) == 0, "analyze failed");
  o.expect(run(cli + " insights checkin-lesson1 --stub" + log) == 0, "insights --stub failed");
  o.expect(run(cli + " report checkin-lesson1 --out " + quoted(report) + log) == 0, "report failed");

  auto a = assessment_from_json(Store(store).get_document(DocumentKind::kAssessment, "checkin-lesson1"));
  std::size_t docs = 0;
  if (fs::is_directory(report / "questions")) {
    for (const auto& e : fs::directory_iterator(report / "questions")) docs += e.path().extension() == ".json";
  }
  o.expect(docs == a.questions.size(), "expected " + std::to_string(a.questions.size()) +
                                           " report documents, found " + std::to_string(docs));
  for (const auto& q : a.questions) {
    auto path = report / "questions" / (q.question_id + ".json");
    if (!fs::exists(path)) {
      o.expect(false, "missing report document for " + q.question_id);
      continue;
    }
    auto doc = Json::parse(read_file(path));
    o.expect(doc["analytics"]["question_id"] == q.question_id, "report analytics mismatch");
    o.expect(doc["insights"].is_object(), "report for " + q.question_id + " lacks insights");
  }
  o.expect(fs::exists(report / "index.html"), "index.html missing");
  if (!o.failures.empty()) {
    std::ifstream in(dir.path() / "log.txt");
    std::cerr << in.rdbuf();
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"Ingestion oracle", 1.0, ingestion_oracle},
      {"Frequency conservation", 5.0, frequency_conservation},
      {"Sampling partition", std::nullopt, sampling_partition},
      {"Cloud geometry", 30.0, cloud_geometry},
      {"Grounding soundness", std::nullopt, grounding_soundness},
      {"Scope check", std::nullopt, scope_check_criterion},
      {"Cache contract", std::nullopt, cache_contract},
      {"Privacy scan", std::nullopt, privacy_scan},
      {"End-to-end offline", std::nullopt, end_to_end},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds && seconds >= *c.limit_seconds) {
      std::ostringstream msg;
      msg << "runtime " << seconds << " s exceeds " << *c.limit_seconds << " s";
      o.failures.push_back(msg.str());
    }
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(3);
    line << (o.failures.empty() ? "PASS" : "FAIL") << "  " << c.name << "  (" << seconds << " s";
    if (c.limit_seconds) line << ", limit " << *c.limit_seconds << " s";
    line << ")";
    if (!o.failures.empty()) {
      line << "  " << o.failures.front();
      if (o.failures.size() > 1) line << " (+" << o.failures.size() - 1 << " more)";
      ++failed;
    }
    std::cout << line.str() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
