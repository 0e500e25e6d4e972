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

#include "classlens/provider.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "classlens/error.hpp"
#include "classlens/json.hpp"
#include "classlens/util.hpp"

namespace classlens {

StubProvider::StubProvider(std::optional<std::filesystem::path> fixture_dir)
    : fixture_dir_(std::move(fixture_dir)) {}

std::string StubProvider::fixture_key(std::string_view prompt) {
  return sha256_hex(prompt).substr(0, 16);
}

std::string StubProvider::generic_completion() {
  return "Here is the analysis.\n\n"
         "```json\n"
         "{\n"
         "  \"summary\": \"Students submitted responses to this question. No curated analysis is "
         "available for this prompt in the offline fixture set.\",\n"
         "  \"understanding_themes\": [],\n"
         "  \"misconceptions\": [],\n"
         "  \"vocabulary_issues\": []\n"
         "}\n"
         "```\n";
}

std::string StubProvider::complete(const std::string& prompt) {
  ++calls_;
  if (fixture_dir_) {
    auto path = *fixture_dir_ / (fixture_key(prompt) + ".txt");
    std::error_code ec;
    if (std::filesystem::is_regular_file(path, ec)) return read_file(path);
  }
  return generic_completion();
}

// ---------------------------------------------------------------------------

std::optional<HttpProviderConfig> HttpProviderConfig::from_env() {
  const char* base = std::getenv("INSIGHT_API_BASE_URL");
  if (base == nullptr || *base == '\0') return std::nullopt;
  HttpProviderConfig c;
  c.base_url = base;
  if (const char* key = std::getenv("INSIGHT_API_KEY")) c.api_key = key;
  if (const char* model = std::getenv("INSIGHT_MODEL"); model != nullptr && *model != '\0') {
    c.model = model;
  }
  return c;
}

namespace {

std::counting_semaphore<kMaxInFlightProviderCalls>& in_flight() {
  static std::counting_semaphore<kMaxInFlightProviderCalls> sem(kMaxInFlightProviderCalls);
  return sem;
}

class InFlightSlot {
 public:
  InFlightSlot() { in_flight().acquire(); }
  ~InFlightSlot() { in_flight().release(); }
  InFlightSlot(const InFlightSlot&) = delete;
  InFlightSlot& operator=(const InFlightSlot&) = delete;
};

struct Attempt {
  enum class Outcome { kOk, kRetryable, kTimeout } outcome;
  std::string body;
  std::string message;
};

}  // namespace

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  const std::string& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "provider base URL needs a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpProvider::provider_id() const { return "openai-compatible@" + scheme_host_port_; }

std::string HttpProvider::complete(const std::string& prompt) {
  Json request;
  request["model"] = config_.model;
  request["temperature"] = 0;
  request["messages"] = Json::array({Json{{"role", "user"}, {"content", prompt}}});
  const std::string payload = request.dump();
  const std::string path = path_prefix_ + "/chat/completions";

  auto attempt = [&]() -> Attempt {
    InFlightSlot slot;
    httplib::Client client(scheme_host_port_);
    auto secs = [](std::chrono::milliseconds ms) {
      return std::pair<time_t, time_t>(ms.count() / 1000, (ms.count() % 1000) * 1000);
    };
    auto [rs, rus] = secs(config_.timeout);
    auto [cs, cus] = secs(config_.connect_timeout);
    client.set_read_timeout(rs, rus);
    client.set_write_timeout(rs, rus);
    client.set_connection_timeout(cs, cus);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      auto err = res.error();
      bool timeout = err == httplib::Error::Read || err == httplib::Error::Write ||
                     err == httplib::Error::ConnectionTimeout;
      return {timeout ? Attempt::Outcome::kTimeout : Attempt::Outcome::kRetryable, {},
              "transport error: " + httplib::to_string(err)};
    }
    if (res->status == 429 || res->status >= 500) {
      return {Attempt::Outcome::kRetryable, {}, "provider returned HTTP " + std::to_string(res->status)};
    }
    if (res->status >= 400) {
      throw Error(ErrorCode::kProviderRefusal,
                  "provider rejected the request with HTTP " + std::to_string(res->status));
    }
    return {Attempt::Outcome::kOk, res->body, {}};
  };

  Attempt last;
  for (std::size_t i = 0;; ++i) {
    last = attempt();
    if (last.outcome == Attempt::Outcome::kOk || i >= config_.backoff.size()) break;
    std::this_thread::sleep_for(config_.backoff[i]);
  }
  if (last.outcome == Attempt::Outcome::kTimeout) {
    throw Error(ErrorCode::kProviderTimeout, "provider timed out after retries (" + last.message + ")");
  }
  if (last.outcome == Attempt::Outcome::kRetryable) {
    throw Error(ErrorCode::kProviderTransport, "provider unavailable after retries (" + last.message + ")");
  }

  Json response;
  try {
    response = Json::parse(last.body);
    const auto& choice = response.at("choices").at(0);
    const auto& message = choice.at("message");
    if (message.contains("refusal") && !message.at("refusal").is_null()) {
      throw Error(ErrorCode::kProviderRefusal, "model refused: " + message.at("refusal").dump());
    }
    if (choice.value("finish_reason", std::string()) == "content_filter") {
      throw Error(ErrorCode::kProviderRefusal, "completion blocked by content filter");
    }
    if (!message.contains("content") || !message.at("content").is_string()) {
      throw Error(ErrorCode::kProviderRefusal, "completion has no text content");
    }
    return message.at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderTransport, std::string("malformed provider response: ") + e.what());
  }
}

}  // namespace classlens
