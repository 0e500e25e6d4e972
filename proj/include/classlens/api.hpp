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

#ifndef CLASSLENS_API_HPP_
#define CLASSLENS_API_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "classlens/analytics.hpp"
#include "classlens/error.hpp"
#include "classlens/ingest.hpp"
#include "classlens/insights.hpp"
#include "classlens/json.hpp"
#include "classlens/provider.hpp"
#include "classlens/store.hpp"
#include "classlens/wordcloud.hpp"

namespace httplib {
class Server;
}

namespace classlens {

enum class ApiErrorCode { kBadRequest, kNotFound, kUnprocessable, kProviderUnavailable, kInternal };

std::string_view to_string(ApiErrorCode code);
int http_status(ApiErrorCode code);
ApiErrorCode api_error_code(ErrorCode code);

struct ApiResponse {
  int status = 200;
  Json body;
};

ApiResponse api_error(ApiErrorCode code, const std::string& message, Json detail = nullptr);

inline constexpr std::size_t kMaxUploadBytes = 20 * 1024 * 1024;
inline constexpr int kDefaultPort = 8080;
inline constexpr std::string_view kDefaultTemplateId = "insights-default";

struct ServiceConfig {
  std::filesystem::path store_root;
  // nullopt: <store_root>/curriculum.json if present, else the built-in
  // sample curriculum.
  std::optional<std::filesystem::path> curriculum_path;
  std::optional<std::string> bearer_token;
  // Serve insights from the offline stub instead of a real provider.
  bool use_stub = false;
  std::optional<std::filesystem::path> fixture_dir;
  CloudConfig cloud;
  // Salt override; defaults to the store's persisted secret.
  std::optional<std::string> salt;

  // Reads CLASSLENS_STORE_ROOT (required unless `store_root` is set later),
  // CLASSLENS_TOKEN, CLASSLENS_SALT.
  static ServiceConfig from_env();
};

// Curriculum context used when none is configured: rainfall/runoff Earth
// science unit with "water cycle" as the known confusable.
const CurriculumContext& sample_curriculum();

// Every endpoint as a plain function of its inputs. The HTTP layer in
// register_routes only translates requests and responses.
class Service {
 public:
  explicit Service(ServiceConfig config, std::unique_ptr<Provider> provider = nullptr);

  ApiResponse ingest(const std::string& csv, const std::optional<std::string>& manifest_json,
                     const ParseOptions& options = {});
  ApiResponse list_assessments() const;
  ApiResponse get_assessment(const std::string& id) const;
  ApiResponse analytics(const std::string& id, const std::string& question_id,
                        const std::optional<std::string>& section,
                        std::optional<std::uint64_t> seed = std::nullopt,
                        bool exclude_flagged = false);
  ApiResponse samples(const std::string& id, const std::string& question_id,
                      const std::optional<std::string>& section,
                      std::optional<std::uint64_t> seed, std::int64_t cursor,
                      std::int64_t page_size);
  ApiResponse insights(const std::string& id, const std::string& question_id,
                       const Json& request_body);

  // Writes <out>/questions/<question_id>.json, <out>/assessment.json and
  // <out>/index.html. Returns the per-question document paths.
  std::vector<std::filesystem::path> export_report(const std::string& id,
                                                   const std::filesystem::path& out);

  // Throws classlens::Error.
  Assessment load_assessment(const std::string& id) const;
  Json compute_bundle(const Assessment& assessment, const std::string& question_id,
                      const std::optional<std::string>& section, std::uint64_t seed,
                      bool exclude_flagged) const;

  Store& store() { return store_; }
  Provider* provider() { return provider_.get(); }
  const CurriculumContext& curriculum() const { return curriculum_; }
  const ServiceConfig& config() const { return config_; }
  std::int64_t analytics_computations() const { return analytics_computations_; }

 private:
  ServiceConfig config_;
  Store store_;
  CurriculumContext curriculum_;
  StopwordSet stopwords_;
  std::unique_ptr<Provider> provider_;

  std::mutex analytics_mutex_;
  std::map<std::string, std::shared_future<Json>> analytics_inflight_;
  std::atomic<std::int64_t> analytics_computations_{0};
};

// Builds the provider named by the config: the stub when use_stub, else an
// HTTP provider from INSIGHT_* env vars, else nullptr.
std::unique_ptr<Provider> make_provider(const ServiceConfig& config);

void register_routes(httplib::Server& server, Service& service);

// Blocks until the server stops.
bool run_server(Service& service, const std::string& host, int port);

// Standalone HTML page for a report directory's documents.
std::string render_report_html(const Json& assessment_summary, const std::vector<Json>& questions);

}  // namespace classlens

#endif  // CLASSLENS_API_HPP_
