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

#ifndef CLASSLENS_STORE_HPP_
#define CLASSLENS_STORE_HPP_

#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "classlens/insights.hpp"
#include "classlens/json.hpp"

namespace classlens {

enum class DocumentKind { kAssessment, kAnalytics, kInsights };

std::string_view to_string(DocumentKind kind);

inline constexpr std::string_view kSchemaVersion = "1";

struct IndexEntry {
  std::string assessment_id;
  std::string title;
  std::string kind;
  std::string ingested_at;

  bool operator==(const IndexEntry&) const = default;
};

Json to_json(const IndexEntry& entry);

// Plain-document store:
//
//   <root>/index.json
//   <root>/assessments/<id>.json
//   <root>/analytics/<id>.json
//   <root>/insights/<digest>.json      (InsightCache entries)
//   <root>/templates/<template_id>.v<version>.tmpl
//   <root>/.salt                       (pseudonymization secret)
//
// Writes are atomic (temp file + rename) and serialized through one
// in-process lock; reads take no lock.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path directory(DocumentKind kind) const;

  // Returns the revision id (content hash). Throws kSchemaViolation or
  // kIoFailure.
  std::string put_document(DocumentKind kind, const std::string& id, const Json& document);
  // Throws kNotFound.
  Json get_document(DocumentKind kind, const std::string& id) const;
  bool has_document(DocumentKind kind, const std::string& id) const;

  // Newest ingestion first.
  std::vector<IndexEntry> list_assessments() const;
  // Rescans assessments/ and rewrites index.json.
  std::vector<IndexEntry> rebuild_index();

  void put_template(const PromptTemplate& tmpl);
  TemplateRegistry load_templates() const;

  InsightCache& insight_cache() { return cache_; }

  // Reads <root>/.salt, creating it with random content on first use.
  std::string salt();

  static std::string revision_of(const Json& document);
  static bool valid_id(std::string_view id);

 private:
  std::filesystem::path path_for(DocumentKind kind, const std::string& id) const;
  void write_index(std::vector<IndexEntry> entries);
  std::vector<IndexEntry> scan_assessments() const;

  std::filesystem::path root_;
  InsightCache cache_;
  std::mutex write_mutex_;
};

}  // namespace classlens

#endif  // CLASSLENS_STORE_HPP_
