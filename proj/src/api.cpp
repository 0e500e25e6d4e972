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

#include "classlens/api.hpp"

#include <cstdlib>
#include <random>
#include <set>

#include <httplib.h>

#include "classlens/util.hpp"

namespace classlens {

std::string_view to_string(ApiErrorCode code) {
  switch (code) {
    case ApiErrorCode::kBadRequest: return "bad_request";
    case ApiErrorCode::kNotFound: return "not_found";
    case ApiErrorCode::kUnprocessable: return "unprocessable";
    case ApiErrorCode::kProviderUnavailable: return "provider_unavailable";
    case ApiErrorCode::kInternal: return "internal";
  }
  return "internal";
}

int http_status(ApiErrorCode code) {
  switch (code) {
    case ApiErrorCode::kBadRequest: return 400;
    case ApiErrorCode::kNotFound: return 404;
    case ApiErrorCode::kUnprocessable: return 422;
    case ApiErrorCode::kProviderUnavailable: return 503;
    case ApiErrorCode::kInternal: return 500;
  }
  return 500;
}

ApiErrorCode api_error_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedCsv:
    case ErrorCode::kEmptyExport:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownSection:
    case ErrorCode::kWrongQuestionKind:
      return ApiErrorCode::kBadRequest;
    case ErrorCode::kMissingColumn:
    case ErrorCode::kInvalidManifest:
    case ErrorCode::kUnparseableCompletion:
    case ErrorCode::kNoResponses:
    case ErrorCode::kTemplateInvalid:
    case ErrorCode::kSchemaViolation:
      return ApiErrorCode::kUnprocessable;
    case ErrorCode::kNotFound:
      return ApiErrorCode::kNotFound;
    case ErrorCode::kProviderTimeout:
    case ErrorCode::kProviderRefusal:
    case ErrorCode::kProviderTransport:
      return ApiErrorCode::kProviderUnavailable;
    case ErrorCode::kMissingSalt:
    case ErrorCode::kIoFailure:
      return ApiErrorCode::kInternal;
  }
  return ApiErrorCode::kInternal;
}

ApiResponse api_error(ApiErrorCode code, const std::string& message, Json detail) {
  return {http_status(code),
          Json{{"code", to_string(code)}, {"message", message}, {"detail", std::move(detail)}}};
}

namespace {

ApiResponse from_error(const Error& e) {
  return api_error(api_error_code(e.code()), e.what(), Json{{"error", to_string(e.code())}});
}

template <typename F>
ApiResponse guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return from_error(e);
  } catch (const std::exception&) {
    return api_error(ApiErrorCode::kInternal, "internal error");
  }
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  if (auto root = env("CLASSLENS_STORE_ROOT")) c.store_root = *root;
  c.bearer_token = env("CLASSLENS_TOKEN");
  c.salt = env("CLASSLENS_SALT");
  if (auto curriculum = env("CLASSLENS_CURRICULUM")) c.curriculum_path = *curriculum;
  return c;
}

const CurriculumContext& sample_curriculum() {
  static const CurriculumContext kContext = [] {
    CurriculumContext c;
    c.curriculum_title = "Urban water runoff: an integrated science, computing and engineering unit";
    c.grade_band = "6-8";
    c.goals = {
        "Explain where rainwater goes when it reaches different surface materials.",
        "Define rainfall, absorption and runoff and relate them through conservation of mass.",
        "Use a computational model to predict runoff for a designed schoolyard.",
        "Design a schoolyard that minimizes runoff after heavy rainfall within cost constraints.",
    };
    c.crosscutting_concepts = {
        "Systems and system models",
        "Energy and matter: flows, cycles, and conservation",
        "Cause and effect",
        "Scale, proportion, and quantity",
    };
    c.topic_lexicon = {"rainfall", "runoff", "absorption", "conservation of mass", "surface material",
                       "permeable", "impermeable", "schoolyard"};
    c.out_of_scope_markers = {"water cycle", "evaporation", "condensation", "transpiration"};
    return c;
  }();
  return kContext;
}

std::unique_ptr<Provider> make_provider(const ServiceConfig& config) {
  if (config.use_stub) return std::make_unique<StubProvider>(config.fixture_dir);
  if (auto http = HttpProviderConfig::from_env()) return std::make_unique<HttpProvider>(*http);
  return nullptr;
}

Service::Service(ServiceConfig config, std::unique_ptr<Provider> provider)
    : config_(std::move(config)), store_(config_.store_root), provider_(std::move(provider)) {
  std::optional<std::filesystem::path> curriculum = config_.curriculum_path;
  std::error_code ec;
  if (!curriculum && std::filesystem::is_regular_file(config_.store_root / "curriculum.json", ec)) {
    curriculum = config_.store_root / "curriculum.json";
  }
  curriculum_ = curriculum ? curriculum_from_json(Json::parse(read_file(*curriculum)))
                           : sample_curriculum();
  stopwords_ = without_terms(default_stopwords(), curriculum_.topic_lexicon);
  config_.cloud.validate();
}

Assessment Service::load_assessment(const std::string& id) const {
  if (!Store::valid_id(id)) throw Error(ErrorCode::kNotFound, "unknown assessment '" + id + "'");
  return assessment_from_json(store_.get_document(DocumentKind::kAssessment, id));
}

ApiResponse Service::ingest(const std::string& csv, const std::optional<std::string>& manifest_json,
                            const ParseOptions& options) {
  return guarded([&]() -> ApiResponse {
    if (csv.size() > kMaxUploadBytes) {
      return api_error(ApiErrorCode::kBadRequest, "upload exceeds 20 MB");
    }
    std::optional<AssessmentManifest> manifest;
    if (manifest_json && !trim(*manifest_json).empty()) {
      Json j = Json::parse(*manifest_json, nullptr, false);
      if (j.is_discarded()) return api_error(ApiErrorCode::kUnprocessable, "manifest is not valid JSON");
      manifest = manifest_from_json(j);
    }
    if (trim(csv).empty()) return api_error(ApiErrorCode::kBadRequest, "uploaded file is empty");
    Assessment parsed = parse_export(csv, manifest, options);
    if (!Store::valid_id(parsed.assessment_id)) {
      return api_error(ApiErrorCode::kUnprocessable,
                       "assessment id may only use letters, digits, '.', '-' and '_'");
    }
    std::string salt = config_.salt ? *config_.salt : store_.salt();
    Assessment a = pseudonymize(std::move(parsed), salt);
    auto issues = validate_assessment(a);
    std::string revision = store_.put_document(DocumentKind::kAssessment, a.assessment_id, to_json(a));

    Json questions = Json::array();
    for (const auto& q : a.questions) questions.push_back(to_json(q));
    Json jissues = Json::array();
    for (const auto& i : issues) jissues.push_back(to_json(i));
    Json body;
    body["assessment_id"] = a.assessment_id;
    body["title"] = a.title;
    body["kind"] = to_string(a.kind);
    body["revision"] = revision;
    body["sections"] = a.sections;
    body["response_count"] = a.responses.size();
    body["questions"] = std::move(questions);
    body["validation_issues"] = std::move(jissues);
    return {201, std::move(body)};
  });
}

ApiResponse Service::list_assessments() const {
  return guarded([&]() -> ApiResponse {
    Json list = Json::array();
    for (const auto& e : store_.list_assessments()) list.push_back(to_json(e));
    return {200, std::move(list)};
  });
}

ApiResponse Service::get_assessment(const std::string& id) const {
  return guarded([&]() -> ApiResponse {
    load_assessment(id);  // validates
    return {200, store_.get_document(DocumentKind::kAssessment, id)};
  });
}

namespace {

// Responses that carry no validation issue, restricted to a section.
std::vector<StudentResponse> unflagged(const Assessment& a, const std::optional<std::string>& section) {
  std::set<std::size_t> flagged;
  for (const auto& issue : validate_assessment(a)) flagged.insert(issue.row);
  Assessment kept = a;
  kept.responses.clear();
  for (std::size_t i = 0; i < a.responses.size(); ++i) {
    if (!flagged.count(i)) kept.responses.push_back(a.responses[i]);
  }
  return section_filter(kept, section);
}

}  // namespace

Json Service::compute_bundle(const Assessment& a, const std::string& question_id,
                             const std::optional<std::string>& section, std::uint64_t seed,
                             bool exclude_flagged) const {
  const Question* q = a.find_question(question_id);
  if (q == nullptr) throw Error(ErrorCode::kNotFound, "unknown question '" + question_id + "'");
  auto rows = exclude_flagged ? unflagged(a, section) : section_filter(a, section);
  auto split = split_non_responses(answers_for(rows, question_id));

  Json b;
  b["schema_version"] = kSchemaVersion;
  b["assessment_id"] = a.assessment_id;
  b["question_id"] = q->question_id;
  b["question_text"] = q->text;
  b["kind"] = to_string(q->kind);
  b["section_filter"] = section ? Json(*section) : Json(nullptr);
  b["seed"] = seed;
  b["exclude_flagged"] = exclude_flagged;
  b["respondents"] = split.answered.size();
  b["non_responses"] = split.non_responses;
  if (q->kind == QuestionKind::kOpenEnded) {
    FrequencyProfile profile = term_frequencies(split.answered, stopwords_);
    profile.question_id = q->question_id;
    profile.section_filter = section;
    CloudConfig cloud = config_.cloud;
    cloud.seed = seed;
    b["frequency_profile"] = to_json(profile);
    b["cloud_layout"] = to_json(layout_cloud(profile, cloud));
    b["choice_distribution"] = nullptr;
  } else {
    ChoiceDistribution dist = choice_distribution(*q, split.answered, a.delimiter);
    dist.section_filter = section;
    b["frequency_profile"] = nullptr;
    b["cloud_layout"] = nullptr;
    b["choice_distribution"] = to_json(dist);
  }
  return b;
}

ApiResponse Service::analytics(const std::string& id, const std::string& question_id,
                               const std::optional<std::string>& section,
                               std::optional<std::uint64_t> seed, bool exclude_flagged) {
  return guarded([&]() -> ApiResponse {
    Assessment a = load_assessment(id);
    if (a.find_question(question_id) == nullptr) {
      throw Error(ErrorCode::kNotFound, "unknown question '" + question_id + "'");
    }
    if (section && a.sections.count(*section) == 0) {
      throw Error(ErrorCode::kUnknownSection, "unknown section '" + *section + "'");
    }
    const std::uint64_t s = seed.value_or(0);
    Json key = Json::array({id, question_id, section ? Json(*section) : Json(nullptr), s,
                            exclude_flagged, sha256_hex(to_json(a).dump())});
    const std::string doc_id = "b_" + sha256_hex(key.dump()).substr(0, 32);

    if (store_.has_document(DocumentKind::kAnalytics, doc_id)) {
      return {200, store_.get_document(DocumentKind::kAnalytics, doc_id)};
    }

    std::promise<Json> promise;
    std::shared_future<Json> future;
    bool owner = false;
    {
      std::lock_guard lock(analytics_mutex_);
      auto it = analytics_inflight_.find(doc_id);
      if (it == analytics_inflight_.end()) {
        future = promise.get_future().share();
        analytics_inflight_.emplace(doc_id, future);
        owner = true;
      } else {
        future = it->second;
      }
    }
    if (owner) {
      try {
        // Another request may have finished between the first lookup and
        // taking ownership.
        if (store_.has_document(DocumentKind::kAnalytics, doc_id)) {
          promise.set_value(store_.get_document(DocumentKind::kAnalytics, doc_id));
        } else {
          ++analytics_computations_;
          Json bundle = compute_bundle(a, question_id, section, s, exclude_flagged);
          store_.put_document(DocumentKind::kAnalytics, doc_id, bundle);
          promise.set_value(std::move(bundle));
        }
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
      std::lock_guard lock(analytics_mutex_);
      analytics_inflight_.erase(doc_id);
    }
    return {200, future.get()};
  });
}

ApiResponse Service::samples(const std::string& id, const std::string& question_id,
                             const std::optional<std::string>& section,
                             std::optional<std::uint64_t> seed, std::int64_t cursor,
                             std::int64_t page_size) {
  return guarded([&]() -> ApiResponse {
    if (cursor < 0) return api_error(ApiErrorCode::kBadRequest, "cursor must be non-negative");
    if (page_size < 1) return api_error(ApiErrorCode::kBadRequest, "page_size must be at least 1");
    Assessment a = load_assessment(id);
    const Question* q = a.find_question(question_id);
    if (q == nullptr) throw Error(ErrorCode::kNotFound, "unknown question '" + question_id + "'");
    // A missing seed means "reshuffle": the server picks one and echoes it.
    const std::uint64_t s = seed ? *seed : std::random_device{}();
    auto answers = answers_for(section_filter(a, section), question_id);
    SamplePage page = sample_unique_responses(answers, page_size, s, cursor);
    page.question_id = question_id;
    page.section_filter = section;
    return {200, to_json(page)};
  });
}

ApiResponse Service::insights(const std::string& id, const std::string& question_id,
                              const Json& body) {
  return guarded([&]() -> ApiResponse {
    if (!body.is_object()) return api_error(ApiErrorCode::kBadRequest, "request body must be an object");
    InsightRequest request;
    request.question_id = question_id;
    std::string template_id(kDefaultTemplateId);
    try {
      if (body.contains("section") && !body.at("section").is_null()) {
        request.section = body.at("section").get<std::string>();
      }
      if (body.contains("template_id") && !body.at("template_id").is_null()) {
        template_id = body.at("template_id").get<std::string>();
      }
      request.include_prescriptive = body.value("include_prescriptive", false);
    } catch (const nlohmann::json::exception&) {
      return api_error(ApiErrorCode::kBadRequest, "malformed insight request");
    }
    Assessment a = load_assessment(id);
    if (provider_ == nullptr) {
      return api_error(ApiErrorCode::kProviderUnavailable,
                       "no insight provider configured (set INSIGHT_API_BASE_URL or enable the stub)");
    }
    TemplateRegistry templates = store_.load_templates();
    const PromptTemplate& tmpl = templates.latest(template_id);
    GroundedReport report =
        cached_insights(store_.insight_cache(), a, request, curriculum_, tmpl, *provider_);
    return {200, to_json(report)};
  });
}

std::vector<std::filesystem::path> Service::export_report(const std::string& id,
                                                          const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  Assessment a = load_assessment(id);
  fs::create_directories(out / "questions");

  Json summary;
  summary["assessment_id"] = a.assessment_id;
  summary["title"] = a.title;
  summary["kind"] = to_string(a.kind);
  summary["ingested_at"] = format_timestamp(a.ingested_at);
  summary["sections"] = a.sections;
  summary["response_count"] = a.responses.size();
  Json qs = Json::array();
  for (const auto& q : a.questions) qs.push_back(to_json(q));
  summary["questions"] = std::move(qs);
  write_file_atomic(out / "assessment.json", summary.dump(2) + "\n");

  // Insights are included when already cached for the default request.
  StubProvider stub_identity;
  const Provider& identity = provider_ ? *provider_ : static_cast<const Provider&>(stub_identity);
  TemplateRegistry templates = store_.load_templates();
  const PromptTemplate& tmpl = templates.latest(kDefaultTemplateId);

  std::vector<fs::path> written;
  std::vector<Json> docs;
  for (const auto& q : a.questions) {
    auto bundle = analytics(id, q.question_id, std::nullopt, 0);
    if (bundle.status != 200) throw Error(ErrorCode::kIoFailure, "analytics failed for " + q.question_id);
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["question"] = to_json(q);
    doc["analytics"] = bundle.body;
    auto page = samples(id, q.question_id, std::nullopt, 0, 0, kDefaultPageSize);
    doc["samples"] = page.body;
    InsightRequest request{q.question_id, std::nullopt, false, 0};
    auto cached = store_.insight_cache().get(cache_key_for(a, request, tmpl, identity));
    doc["insights"] = cached ? to_json(*cached) : Json(nullptr);
    fs::path path = out / "questions" / (q.question_id + ".json");
    write_file_atomic(path, doc.dump(2) + "\n");
    written.push_back(path);
    docs.push_back(std::move(doc));
  }
  write_file_atomic(out / "index.html", render_report_html(summary, docs));
  return written;
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void send(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

std::optional<std::int64_t> int_param(const httplib::Request& req, const char* name) {
  auto v = param(req, name);
  if (!v || v->empty()) return std::nullopt;
  std::size_t used = 0;
  long long n = std::stoll(*v, &used);
  if (used != v->size()) throw std::invalid_argument(name);
  return n;
}

std::optional<std::uint64_t> seed_param(const httplib::Request& req) {
  auto v = param(req, "seed");
  if (!v || v->empty()) return std::nullopt;
  std::size_t used = 0;
  if (v->front() == '-') throw std::invalid_argument("seed");
  unsigned long long n = std::stoull(*v, &used);
  if (used != v->size()) throw std::invalid_argument("seed");
  return n;
}

template <typename F>
httplib::Server::Handler handler(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      send(res, f(req));
    } catch (const std::invalid_argument& e) {
      send(res, api_error(ApiErrorCode::kBadRequest, std::string("bad query parameter: ") + e.what()));
    } catch (const std::out_of_range&) {
      send(res, api_error(ApiErrorCode::kBadRequest, std::string("query parameter out of range")));
    }
  };
}

}  // namespace

void register_routes(httplib::Server& server, Service& service) {
  server.set_payload_max_length(kMaxUploadBytes);

  server.set_pre_routing_handler([&service](const httplib::Request& req, httplib::Response& res) {
    const auto& token = service.config().bearer_token;
    if (!token) return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") == "Bearer " + *token) {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    auto err = api_error(ApiErrorCode::kBadRequest, "missing or invalid bearer token");
    err.status = 401;
    send(res, err);
    return httplib::Server::HandlerResponse::Handled;
  });

  server.Get("/assessments", handler([&](const httplib::Request&) { return service.list_assessments(); }));

  server.Post("/assessments", handler([&](const httplib::Request& req) {
    std::string csv;
    std::optional<std::string> manifest;
    ParseOptions options;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("file")) {
        return api_error(ApiErrorCode::kBadRequest, "multipart field 'file' is required");
      }
      csv = req.get_file_value("file").content;
      if (req.has_file("manifest")) manifest = req.get_file_value("manifest").content;
      if (req.has_file("title")) options.title = req.get_file_value("title").content;
      if (req.has_file("assessment_id")) options.assessment_id = req.get_file_value("assessment_id").content;
      if (req.has_file("kind")) {
        try {
          options.kind = parse_assessment_kind(req.get_file_value("kind").content);
        } catch (const Error& e) {
          return api_error(ApiErrorCode::kBadRequest, e.what());
        }
      }
    } else {
      csv = req.body;
    }
    return service.ingest(csv, manifest, options);
  }));

  server.Get(R"(/assessments/([^/]+))", handler([&](const httplib::Request& req) {
    return service.get_assessment(req.matches[1]);
  }));

  server.Get(R"(/assessments/([^/]+)/questions/([^/]+)/analytics)",
             handler([&](const httplib::Request& req) {
               bool exclude = param(req, "exclude_flagged").value_or("false") == "true";
               return service.analytics(req.matches[1], req.matches[2], param(req, "section"),
                                        seed_param(req), exclude);
             }));

  server.Get(R"(/assessments/([^/]+)/questions/([^/]+)/samples)",
             handler([&](const httplib::Request& req) {
               return service.samples(req.matches[1], req.matches[2], param(req, "section"),
                                      seed_param(req), int_param(req, "cursor").value_or(0),
                                      int_param(req, "page_size").value_or(kDefaultPageSize));
             }));

  server.Post(R"(/assessments/([^/]+)/questions/([^/]+)/insights)",
              handler([&](const httplib::Request& req) {
                Json body = req.body.empty() ? Json::object() : Json::parse(req.body, nullptr, false);
                if (body.is_discarded()) return api_error(ApiErrorCode::kBadRequest, "body is not JSON");
                return service.insights(req.matches[1], req.matches[2], body);
              }));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    ApiResponse err = res.status == 404 ? api_error(ApiErrorCode::kNotFound, "no such endpoint")
                      : res.status == 413
                          ? api_error(ApiErrorCode::kBadRequest, "upload exceeds 20 MB")
                          : api_error(ApiErrorCode::kBadRequest, "request rejected");
    err.status = res.status;
    send(res, err);
  });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    send(res, api_error(ApiErrorCode::kInternal, "internal error"));
  });
}

bool run_server(Service& service, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, service);
  return server.listen(host, port);
}

}  // namespace classlens
