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

// Python bindings. Structured values cross the boundary as JSON text and are
// decoded with the json module on the Python side.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "classlens/analytics.hpp"
#include "classlens/api.hpp"
#include "classlens/ingest.hpp"
#include "classlens/insights.hpp"
#include "classlens/wordcloud.hpp"

namespace py = pybind11;
using classlens::Json;

namespace {

classlens::Assessment parse_and_pseudonymize(const std::string& csv,
                                             const std::optional<std::string>& manifest_json,
                                             const std::string& salt) {
  std::optional<classlens::AssessmentManifest> manifest;
  if (manifest_json) manifest = classlens::manifest_from_json(Json::parse(*manifest_json));
  return classlens::pseudonymize(classlens::parse_export(csv, manifest), salt);
}

std::string api_json(const classlens::ApiResponse& r) {
  return Json{{"status", r.status}, {"body", r.body}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the classlens package";

  static py::exception<classlens::Error> error(m, "ClassLensError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const classlens::Error& e) {
      py::set_error(error, (std::string(classlens::to_string(e.code())) + ": " + e.what()).c_str());
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("normalize_text", &classlens::normalize_text, py::arg("text"));
  m.def("normalized_form", &classlens::normalized_form, py::arg("text"));
  m.def("pseudonym_for", &classlens::pseudonym_for, py::arg("salt"), py::arg("name"));
  m.def("question_id_for", &classlens::question_id_for, py::arg("header"));

  m.def(
      "parse_export",
      [](const std::string& csv, std::optional<std::string> manifest, const std::string& salt) {
        return classlens::to_json(parse_and_pseudonymize(csv, manifest, salt)).dump();
      },
      py::arg("csv"), py::arg("manifest") = py::none(), py::arg("salt"),
      "Parse and pseudonymize an export; returns the assessment document as JSON text.");

  m.def(
      "term_frequencies",
      [](const std::vector<std::string>& responses) {
        return classlens::to_json(classlens::term_frequencies(responses, classlens::default_stopwords()))
            .dump();
      },
      py::arg("responses"));

  m.def(
      "layout_cloud",
      [](const std::vector<std::pair<std::string, std::int64_t>>& terms, std::uint64_t seed,
         int width, int height) {
        classlens::FrequencyProfile profile;
        for (const auto& [term, count] : terms) {
          profile.terms.push_back({term, count});
          profile.total_tokens += count;
        }
        classlens::CloudConfig config;
        config.seed = seed;
        config.canvas_width = width;
        config.canvas_height = height;
        config.validate();
        return classlens::to_json(classlens::layout_cloud(profile, config)).dump();
      },
      py::arg("terms"), py::arg("seed") = 0, py::arg("width") = 800, py::arg("height") = 600);

  m.def(
      "sample_unique_responses",
      [](const std::vector<std::string>& responses, std::int64_t page_size, std::uint64_t seed,
         std::int64_t cursor) {
        return classlens::to_json(
                   classlens::sample_unique_responses(responses, page_size, seed, cursor))
            .dump();
      },
      py::arg("responses"), py::arg("page_size") = classlens::kDefaultPageSize, py::arg("seed") = 0,
      py::arg("cursor") = 0);

  m.def(
      "ground_check",
      [](const std::string& report_json, const std::vector<std::string>& responses) {
        auto report = classlens::parse_completion(report_json);
        return classlens::to_json(classlens::ground_check(report, responses)).dump();
      },
      py::arg("report"), py::arg("responses"));

  py::class_<classlens::Service>(m, "Service")
      .def(py::init([](const std::string& store_root, bool use_stub,
                       std::optional<std::string> fixture_dir, std::optional<std::string> salt) {
             classlens::ServiceConfig config;
             config.store_root = store_root;
             config.use_stub = use_stub;
             if (fixture_dir) config.fixture_dir = *fixture_dir;
             config.salt = std::move(salt);
             auto provider = classlens::make_provider(config);
             return std::make_unique<classlens::Service>(config, std::move(provider));
           }),
           py::arg("store_root"), py::arg("use_stub") = true, py::arg("fixture_dir") = py::none(),
           py::arg("salt") = py::none())
      .def(
          "ingest",
          [](classlens::Service& s, const std::string& csv, std::optional<std::string> manifest) {
            py::gil_scoped_release release;
            return api_json(s.ingest(csv, manifest));
          },
          py::arg("csv"), py::arg("manifest") = py::none())
      .def("list_assessments", [](classlens::Service& s) { return api_json(s.list_assessments()); })
      .def(
          "analytics",
          [](classlens::Service& s, const std::string& id, const std::string& qid,
             std::optional<std::string> section, std::optional<std::uint64_t> seed) {
            py::gil_scoped_release release;
            return api_json(s.analytics(id, qid, section, seed));
          },
          py::arg("assessment_id"), py::arg("question_id"), py::arg("section") = py::none(),
          py::arg("seed") = py::none())
      .def(
          "samples",
          [](classlens::Service& s, const std::string& id, const std::string& qid,
             std::optional<std::string> section, std::optional<std::uint64_t> seed,
             std::int64_t cursor, std::int64_t page_size) {
            py::gil_scoped_release release;
            return api_json(s.samples(id, qid, section, seed, cursor, page_size));
          },
          py::arg("assessment_id"), py::arg("question_id"), py::arg("section") = py::none(),
          py::arg("seed") = py::none(), py::arg("cursor") = 0,
          py::arg("page_size") = classlens::kDefaultPageSize)
      .def(
          "insights",
          [](classlens::Service& s, const std::string& id, const std::string& qid,
             const std::string& body) {
            Json j = Json::parse(body);
            py::gil_scoped_release release;
            return api_json(s.insights(id, qid, j));
          },
          py::arg("assessment_id"), py::arg("question_id"), py::arg("body") = "{}")
      .def(
          "export_report",
          [](classlens::Service& s, const std::string& id, const std::string& out) {
            std::vector<std::string> paths;
            for (const auto& p : s.export_report(id, out)) paths.push_back(p.string());
            return paths;
          },
          py::arg("assessment_id"), py::arg("out"));
}
