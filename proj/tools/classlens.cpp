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

// classlens: command-line front end for the assessment store.
//
//   classlens [--store DIR] ingest export.csv [--manifest m.json]
//   classlens analyze <assessment_id> [--question Q] [--section S] [--seed N]
//   classlens insights <assessment_id> [--question Q] [--stub]
//   classlens report <assessment_id> --out DIR
//   classlens serve [--port P]
//   classlens prompt <assessment_id> --question Q
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "classlens/api.hpp"
#include "classlens/util.hpp"

namespace {

using classlens::ApiResponse;
using classlens::Json;

int emit(const ApiResponse& r) {
  if (r.status >= 400) {
    std::cerr << r.body.dump(2) << "\n";
    return 1;
  }
  std::cout << r.body.dump(2) << "\n";
  return 0;
}

// Resolves --question against ids first, then exact question text.
std::string resolve_question(const classlens::Assessment& a, const std::string& q) {
  if (a.find_question(q) != nullptr) return q;
  for (const auto& question : a.questions) {
    if (question.text == q || classlens::trim(question.text) == classlens::trim(q)) {
      return question.question_id;
    }
  }
  throw classlens::Error(classlens::ErrorCode::kNotFound, "unknown question '" + q + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classroom formative-assessment analytics"};
  app.require_subcommand(1);

  classlens::ServiceConfig config = classlens::ServiceConfig::from_env();
  std::string store_root = config.store_root.empty() ? std::string("classlens-store")
                                                     : config.store_root.string();
  std::string curriculum;
  std::string fixtures;
  std::string salt;
  bool stub = false;
  app.add_option("--store", store_root, "Store directory (env CLASSLENS_STORE_ROOT)");
  app.add_option("--curriculum", curriculum, "Curriculum context JSON");
  app.add_option("--salt", salt, "Pseudonymization salt (env CLASSLENS_SALT)");
  app.add_flag("--stub", stub, "Use the offline stub provider for insights");
  app.add_option("--fixtures", fixtures, "Stub fixture directory")->check(CLI::ExistingDirectory);

  auto* ingest = app.add_subcommand("ingest", "Ingest a survey export CSV");
  std::string csv_path, manifest_path, title, kind, assessment_id;
  ingest->add_option("csv", csv_path, "Export CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--manifest", manifest_path, "Assessment manifest JSON")->check(CLI::ExistingFile);
  ingest->add_option("--title", title, "Title when no manifest is given");
  ingest->add_option("--kind", kind, "check_in | exit_ticket | formative");
  ingest->add_option("--id", assessment_id, "Assessment id when no manifest is given");

  std::string id, question, section;
  std::optional<std::uint64_t> seed;
  auto* analyze = app.add_subcommand("analyze", "Word cloud / distribution for each question");
  analyze->add_option("assessment_id", id)->required();
  analyze->add_option("--question", question, "Question id or text (default: all)");
  analyze->add_option("--section", section, "Restrict to one section");
  analyze->add_option("--seed", seed, "Layout seed (default 0)");

  auto* insights = app.add_subcommand("insights", "Generate grounded insights for open-ended questions");
  bool prescriptive = false;
  insights->add_option("assessment_id", id)->required();
  insights->add_option("--question", question, "Question id or text (default: all open-ended)");
  insights->add_option("--section", section, "Restrict to one section");
  insights->add_flag("--prescriptive", prescriptive, "Ask for instructional suggestions");
  insights->add_flag("--stub", stub, "Use the offline stub provider");

  auto* report = app.add_subcommand("report", "Export a static report directory");
  std::string out_dir;
  report->add_option("assessment_id", id)->required();
  report->add_option("--out", out_dir, "Output directory")->required();

  auto* serve = app.add_subcommand("serve", "Run the REST service");
  int port = classlens::kDefaultPort;
  std::string host = "127.0.0.1";
  serve->add_option("--port", port, "Listen port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Listen address");

  auto* prompt = app.add_subcommand("prompt", "Print the assembled insight prompt and its fixture key");
  prompt->add_option("assessment_id", id)->required();
  prompt->add_option("--question", question, "Question id or text")->required();
  prompt->add_option("--section", section, "Restrict to one section");
  prompt->add_flag("--prescriptive", prescriptive, "Include the suggestions instruction");

  CLI11_PARSE(app, argc, argv);

  try {
    config.store_root = store_root;
    if (!curriculum.empty()) config.curriculum_path = curriculum;
    if (!salt.empty()) config.salt = salt;
    if (!fixtures.empty()) config.fixture_dir = fixtures;
    config.use_stub = stub;
    std::unique_ptr<classlens::Provider> provider = classlens::make_provider(config);
    classlens::Service service(config, std::move(provider));
    std::optional<std::string> section_opt;
    if (!section.empty()) section_opt = section;

    if (*ingest) {
      std::optional<std::string> manifest;
      if (!manifest_path.empty()) manifest = classlens::read_file(manifest_path);
      classlens::ParseOptions options;
      if (!title.empty()) options.title = title;
      if (!kind.empty()) options.kind = classlens::parse_assessment_kind(kind);
      options.assessment_id = assessment_id;
      return emit(service.ingest(classlens::read_file(csv_path), manifest, options));
    }

    if (*analyze) {
      auto a = service.load_assessment(id);
      Json out = Json::array();
      for (const auto& q : a.questions) {
        if (!question.empty() && q.question_id != resolve_question(a, question)) continue;
        auto r = service.analytics(id, q.question_id, section_opt, seed.value_or(0));
        if (r.status >= 400) return emit(r);
        out.push_back(std::move(r.body));
      }
      return emit({200, std::move(out)});
    }

    if (*insights) {
      auto a = service.load_assessment(id);
      Json out = Json::array();
      for (const auto& q : a.questions) {
        if (question.empty() ? q.kind != classlens::QuestionKind::kOpenEnded
                             : q.question_id != resolve_question(a, question)) {
          continue;
        }
        Json body{{"section", section_opt ? Json(*section_opt) : Json(nullptr)},
                  {"include_prescriptive", prescriptive}};
        auto r = service.insights(id, q.question_id, body);
        if (r.status >= 400) return emit(r);
        out.push_back(std::move(r.body));
      }
      return emit({200, std::move(out)});
    }

    if (*report) {
      auto written = service.export_report(id, out_dir);
      std::cout << "wrote " << written.size() << " question documents and index.html to " << out_dir
                << "\n";
      return 0;
    }

    if (*serve) {
      std::cerr << "classlens: listening on http://" << host << ":" << port << "\n";
      return classlens::run_server(service, host, port) ? 0 : 1;
    }

    if (*prompt) {
      auto a = service.load_assessment(id);
      classlens::InsightRequest request{resolve_question(a, question), section_opt, prescriptive, 0};
      auto templates = service.store().load_templates();
      auto p = classlens::prompt_for(a, request, service.curriculum(),
                                     templates.latest(classlens::kDefaultTemplateId));
      std::cout << p.text;
      std::cerr << "fixture key: " << classlens::StubProvider::fixture_key(p.text) << "\n"
                << "estimated tokens: " << p.estimated_tokens << ", responses " << p.included_responses
                << " of " << p.total_responses << "\n";
      return 0;
    }
  } catch (const classlens::Error& e) {
    return emit(classlens::api_error(classlens::api_error_code(e.code()), e.what(),
                                     Json{{"error", classlens::to_string(e.code())}}));
  } catch (const std::exception& e) {
    std::cerr << "classlens: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
