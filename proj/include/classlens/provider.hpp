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

#ifndef CLASSLENS_PROVIDER_HPP_
#define CLASSLENS_PROVIDER_HPP_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace classlens {

// A text-generation backend: one prompt in, one completion out.
class Provider {
 public:
  virtual ~Provider() = default;

  // Throws kProviderTimeout, kProviderRefusal or kProviderTransport.
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string provider_id() const = 0;
  virtual std::string model_id() const = 0;
};

// Deterministic test double. Completions are looked up in `fixture_dir` as
// `<fixture_key(prompt)>.txt`; anything else gets a generic well-formed
// completion.
class StubProvider : public Provider {
 public:
  explicit StubProvider(std::optional<std::filesystem::path> fixture_dir = std::nullopt);

  std::string complete(const std::string& prompt) override;
  std::string provider_id() const override { return "stub"; }
  std::string model_id() const override { return "stub-fixtures-v1"; }

  std::int64_t call_count() const { return calls_.load(); }

  // First 16 hex digits of SHA-256(prompt).
  static std::string fixture_key(std::string_view prompt);
  static std::string generic_completion();

 private:
  std::optional<std::filesystem::path> fixture_dir_;
  std::atomic<std::int64_t> calls_{0};
};

struct HttpProviderConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::string model = "gpt-4o-2024-08-06";
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds connect_timeout{10'000};
  // One entry per retry, used on transport errors only.
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000),
                                                 std::chrono::milliseconds(4000)};

  // From INSIGHT_API_BASE_URL, INSIGHT_API_KEY, INSIGHT_MODEL. nullopt when
  // no base URL is set.
  static std::optional<HttpProviderConfig> from_env();
};

inline constexpr int kMaxInFlightProviderCalls = 4;

// Chat-completion client (POST {base_url}/chat/completions). At most
// kMaxInFlightProviderCalls requests run at once across all instances.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);

  std::string complete(const std::string& prompt) override;
  std::string provider_id() const override;
  std::string model_id() const override { return config_.model; }

 private:
  HttpProviderConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace classlens

#endif  // CLASSLENS_PROVIDER_HPP_
