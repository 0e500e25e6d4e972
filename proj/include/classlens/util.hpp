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

#ifndef CLASSLENS_UTIL_HPP_
#define CLASSLENS_UTIL_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace classlens {

using Timestamp = std::chrono::sys_seconds;

// Hex-encoded SHA-256 digest.
std::string sha256_hex(std::string_view data);

// Hex-encoded HMAC-SHA256 of `data` under `key`.
std::string hmac_sha256_hex(std::string_view key, std::string_view data);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// ISO-8601 "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_iso_timestamp(std::string_view s);

Timestamp now_seconds();

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

void log_warning(std::string_view message);

// Seeded generator with a portable draw procedure. std::mt19937_64 output is
// fixed by the standard; the bounded draws below avoid the
// implementation-defined std distributions so sequences match across
// standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  // Uniform in [0, 1) with 53 bits of precision.
  double unit();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace classlens

#endif  // CLASSLENS_UTIL_HPP_
