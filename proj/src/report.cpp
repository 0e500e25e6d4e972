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

#include <algorithm>
#include <sstream>

#include "classlens/api.hpp"

namespace classlens {

namespace {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string str(const Json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

void render_cloud(std::ostringstream& os, const Json& layout) {
  const auto& cfg = layout.at("config");
  const int w = cfg.at("canvas_width").get<int>();
  const int h = cfg.at("canvas_height").get<int>();
  os << "<svg class=\"cloud\" viewBox=\"0 0 " << w << ' ' << h << "\" width=\"" << w
     << "\" height=\"" << h << "\" role=\"img\">\n";
  // The layout's boxes come from a fixed-width model; textLength squeezes or
  // stretches the glyphs into each box so the page matches the stored layout.
  for (const auto& p : layout.at("placed")) {
    const int x = p.at("x").get<int>();
    const int y = p.at("y").get<int>();
    const int bw = p.at("width").get<int>();
    const int bh = p.at("height").get<int>();
    const int font = p.at("font_size").get<int>();
    const std::string term = escape(p.at("term").get<std::string>());
    const std::string title = "<title>" + term + " (" + std::to_string(p.at("count").get<long long>()) + ")</title>";
    if (p.at("rotated").get<bool>()) {
      const int cx = x + bw / 2;
      const int cy = y + bh / 2;
      os << "  <text x=\"" << cx << "\" y=\"" << cy << "\" font-size=\"" << font
         << "\" text-anchor=\"middle\" dominant-baseline=\"central\" textLength=\"" << bh
         << "\" lengthAdjust=\"spacingAndGlyphs\" transform=\"rotate(-90 " << cx << ' ' << cy
         << ")\">" << title << term << "</text>\n";
    } else {
      os << "  <text x=\"" << x << "\" y=\"" << y + bh / 2 << "\" font-size=\"" << font
         << "\" dominant-baseline=\"central\" textLength=\"" << bw
         << "\" lengthAdjust=\"spacingAndGlyphs\">" << title << term << "</text>\n";
    }
  }
  os << "</svg>\n";
  const auto& dropped = layout.at("dropped_terms");
  if (!dropped.empty()) {
    os << "<p class=\"muted\">Not placed: ";
    for (std::size_t i = 0; i < dropped.size(); ++i) {
      os << (i ? ", " : "") << escape(dropped[i].get<std::string>());
    }
    os << "</p>\n";
  }
}

void render_bars(std::ostringstream& os, const Json& dist) {
  const auto& counts = dist.at("counts");
  long long max_count = 1;
  for (const auto& c : counts.items()) max_count = std::max(max_count, c.value().get<long long>());
  const int row = 28;
  const int label_w = 220;
  const int bar_w = 420;
  os << "<svg class=\"bars\" width=\"" << label_w + bar_w + 60 << "\" height=\""
     << row * static_cast<int>(counts.size()) + 8 << "\">\n";
  int y = 4;
  for (const auto& c : counts.items()) {
    const long long n = c.value().get<long long>();
    const int len = static_cast<int>(bar_w * n / max_count);
    os << "  <text x=\"" << label_w - 8 << "\" y=\"" << y + row / 2
       << "\" text-anchor=\"end\" dominant-baseline=\"central\">"
       << escape(c.key()) << "</text>\n";
    os << "  <rect x=\"" << label_w << "\" y=\"" << y + 4 << "\" width=\"" << len
       << "\" height=\"" << row - 8 << "\"/>\n";
    os << "  <text x=\"" << label_w + len + 6 << "\" y=\"" << y + row / 2
       << "\" dominant-baseline=\"central\">" << n << "</text>\n";
    y += row;
  }
  os << "</svg>\n<p class=\"muted\">" << dist.at("respondents").get<long long>()
     << " respondents</p>\n";
}

void render_list(std::ostringstream& os, const char* heading, const Json& items) {
  if (items.empty()) return;
  os << "<h4>" << heading << "</h4>\n<ul>\n";
  for (const auto& i : items) os << "  <li>" << escape(str(i)) << "</li>\n";
  os << "</ul>\n";
}

void render_insights(std::ostringstream& os, const Json& grounded) {
  const auto& r = grounded.at("report");
  os << "<div class=\"insights\">\n<h3>Insights</h3>\n";
  const auto& flags = grounded.at("scope_flags");
  if (!flags.empty()) {
    os << "<p class=\"warn\">Possible drift outside the unit: ";
    for (std::size_t i = 0; i < flags.size(); ++i) {
      os << (i ? ", " : "") << escape(flags[i].at("term").get<std::string>()) << " (in "
         << escape(flags[i].at("location").get<std::string>()) << ")";
    }
    os << "</p>\n";
  }
  os << "<p>" << escape(r.at("summary").get<std::string>()) << "</p>\n";
  render_list(os, "What students understand", r.at("understanding_themes"));
  const auto& ms = r.at("misconceptions");
  if (!ms.empty()) {
    os << "<h4>Misconceptions</h4>\n<ul>\n";
    for (const auto& m : ms) {
      os << "  <li>" << escape(m.at("claim").get<std::string>()) << "<ul>\n";
      for (const auto& e : m.at("evidence")) {
        os << "    <li><q>" << escape(e.get<std::string>()) << "</q></li>\n";
      }
      os << "  </ul></li>\n";
    }
    os << "</ul>\n";
  }
  render_list(os, "Vocabulary", r.at("vocabulary_issues"));
  const auto& ps = r.at("prescriptive_suggestions");
  if (!ps.is_null()) {
    os << "<h4>Suggestions <span class=\"warn\">(" << escape(ps.at("flag").get<std::string>())
       << ")</span></h4>\n<ul>\n";
    for (const auto& s : ps.at("items")) os << "  <li>" << escape(s.get<std::string>()) << "</li>\n";
    os << "</ul>\n";
  }
  const auto& g = grounded.at("grounding");
  const auto& prov = r.at("provenance");
  os << "<p class=\"muted\">Evidence kept: " << g.at("fragments_kept").get<long long>() << " of "
     << g.at("fragments_total").get<long long>() << ". Generated by "
     << escape(prov.at("provider_id").get<std::string>()) << " / "
     << escape(prov.at("model_id").get<std::string>()) << " with template "
     << escape(prov.at("template_id").get<std::string>()) << " v" << prov.at("version").get<int>()
     << " at " << escape(prov.at("generated_at").get<std::string>()) << ".</p>\n</div>\n";
}

}  // namespace

std::string render_report_html(const Json& summary, const std::vector<Json>& questions) {
  std::ostringstream os;
  const std::string title = escape(summary.at("title").get<std::string>());
  os << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>" << title
     << "</title>\n<style>\n"
        "body{font-family:system-ui,sans-serif;max-width:60rem;margin:2rem auto;padding:0 1rem;color:#222}\n"
        "section{border-top:1px solid #ccc;padding-top:1rem;margin-top:2rem}\n"
        ".cloud{border:1px solid #eee;max-width:100%;height:auto}\n"
        ".cloud text{font-family:monospace;fill:#1b4f72}\n"
        ".bars rect{fill:#2e86c1}\n.muted{color:#777;font-size:.9rem}\n.warn{color:#a04000}\n"
        "</style>\n</head>\n<body>\n";
  os << "<h1>" << title << "</h1>\n<p class=\"muted\">"
     << escape(summary.at("kind").get<std::string>()) << ", "
     << summary.at("response_count").get<long long>() << " responses, ingested "
     << escape(summary.at("ingested_at").get<std::string>()) << ". Sections: ";
  bool first = true;
  for (const auto& s : summary.at("sections")) {
    os << (first ? "" : ", ") << escape(s.get<std::string>());
    first = false;
  }
  os << ".</p>\n";

  for (const auto& doc : questions) {
    const auto& q = doc.at("question");
    const auto& a = doc.at("analytics");
    os << "<section id=\"" << escape(q.at("question_id").get<std::string>()) << "\">\n<h2>"
       << escape(q.at("text").get<std::string>()) << "</h2>\n<p class=\"muted\">"
       << a.at("respondents").get<long long>() << " answered, " << a.at("non_responses").get<long long>()
       << " blank</p>\n";
    if (!a.at("cloud_layout").is_null()) render_cloud(os, a.at("cloud_layout"));
    if (!a.at("choice_distribution").is_null()) render_bars(os, a.at("choice_distribution"));
    const auto& items = doc.at("samples").at("items");
    if (!items.empty()) {
      os << "<h3>Sample responses</h3>\n<ul>\n";
      for (const auto& i : items) os << "  <li>" << escape(i.get<std::string>()) << "</li>\n";
      os << "</ul>\n";
    }
    if (!doc.at("insights").is_null()) render_insights(os, doc.at("insights"));
    os << "</section>\n";
  }
  os << "</body>\n</html>\n";
  return os.str();
}

}  // namespace classlens
