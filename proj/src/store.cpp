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

#include "classlens/store.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include "classlens/error.hpp"
#include "classlens/ingest.hpp"
#include "classlens/util.hpp"

namespace classlens {

namespace fs = std::filesystem;

std::string_view to_string(DocumentKind kind) {
  switch (kind) {
    case DocumentKind::kAssessment: return "assessments";
    case DocumentKind::kAnalytics: return "analytics";
    case DocumentKind::kInsights: return "insights";
  }
  return "assessments";
}

Json to_json(const IndexEntry& e) {
  return Json{{"assessment_id", e.assessment_id},
              {"title", e.title},
              {"kind", e.kind},
              {"ingested_at", e.ingested_at}};
}

Store::Store(fs::path root) : root_(std::move(root)), cache_(root_ / "insights") {
  std::error_code ec;
  for (auto kind : {DocumentKind::kAssessment, DocumentKind::kAnalytics, DocumentKind::kInsights}) {
    fs::create_directories(directory(kind), ec);
  }
  fs::create_directories(root_ / "templates", ec);
  if (!fs::is_directory(root_, ec)) {
    throw Error(ErrorCode::kIoFailure, "cannot create store root " + root_.string());
  }
}

fs::path Store::directory(DocumentKind kind) const { return root_ / std::string(to_string(kind)); }

bool Store::valid_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

fs::path Store::path_for(DocumentKind kind, const std::string& id) const {
  if (!valid_id(id)) throw Error(ErrorCode::kInvalidArgument, "invalid document id '" + id + "'");
  return directory(kind) / (id + ".json");
}

std::string Store::revision_of(const Json& document) { return sha256_hex(document.dump()); }

namespace {

void check_schema(DocumentKind kind, const Json& doc) {
  if (!doc.is_object() || !doc.contains("schema_version") || !doc.at("schema_version").is_string() ||
      doc.at("schema_version").get<std::string>() != kSchemaVersion) {
    throw Error(ErrorCode::kSchemaViolation, "document lacks schema_version \"1\"");
  }
  switch (kind) {
    case DocumentKind::kAssessment:
      assessment_from_json(doc);
      break;
    case DocumentKind::kInsights:
      grounded_report_from_json(doc);
      break;
    case DocumentKind::kAnalytics:
      for (const char* key : {"assessment_id", "question_id", "kind"}) {
        if (!doc.contains(key) || !doc.at(key).is_string()) {
          throw Error(ErrorCode::kSchemaViolation,
                      std::string("analytics document lacks string field '") + key + "'");
        }
      }
      break;
  }
}

IndexEntry entry_for(const Json& doc) {
  return {doc.at("assessment_id").get<std::string>(), doc.at("title").get<std::string>(),
          doc.at("kind").get<std::string>(), doc.at("ingested_at").get<std::string>()};
}

void sort_entries(std::vector<IndexEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const IndexEntry& a, const IndexEntry& b) {
    if (a.ingested_at != b.ingested_at) return a.ingested_at > b.ingested_at;
    return a.assessment_id < b.assessment_id;
  });
}

}  // namespace

std::string Store::put_document(DocumentKind kind, const std::string& id, const Json& document) {
  check_schema(kind, document);
  const auto path = path_for(kind, id);
  const std::string text = document.dump(2) + "\n";
  std::lock_guard lock(write_mutex_);
  write_file_atomic(path, text);
  if (kind == DocumentKind::kAssessment) {
    auto entries = scan_assessments();
    write_index(std::move(entries));
  }
  return revision_of(document);
}

Json Store::get_document(DocumentKind kind, const std::string& id) const {
  const auto path = path_for(kind, id);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kNotFound, std::string(to_string(kind)) + " document '" + id + "' not found");
  }
  try {
    return Json::parse(read_file(path));
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kSchemaViolation, "stored document " + path.string() + " is corrupt");
  }
}

bool Store::has_document(DocumentKind kind, const std::string& id) const {
  std::error_code ec;
  return valid_id(id) && fs::is_regular_file(path_for(kind, id), ec);
}

std::vector<IndexEntry> Store::scan_assessments() const {
  std::vector<IndexEntry> entries;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(directory(DocumentKind::kAssessment), ec)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    try {
      entries.push_back(entry_for(Json::parse(read_file(e.path()))));
    } catch (const std::exception&) {
      log_warning("skipping unreadable assessment " + e.path().filename().string());
    }
  }
  sort_entries(entries);
  return entries;
}

void Store::write_index(std::vector<IndexEntry> entries) {
  sort_entries(entries);
  Json list = Json::array();
  for (const auto& e : entries) list.push_back(to_json(e));
  Json index{{"schema_version", kSchemaVersion}, {"assessments", std::move(list)}};
  write_file_atomic(root_ / "index.json", index.dump(2) + "\n");
}

std::vector<IndexEntry> Store::list_assessments() const {
  const auto path = root_ / "index.json";
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return scan_assessments();
  try {
    Json index = Json::parse(read_file(path));
    std::vector<IndexEntry> entries;
    for (const auto& e : index.at("assessments")) entries.push_back(entry_for(e));
    sort_entries(entries);
    return entries;
  } catch (const std::exception&) {
    log_warning("index.json is unreadable; scanning assessments instead");
    return scan_assessments();
  }
}

std::vector<IndexEntry> Store::rebuild_index() {
  std::lock_guard lock(write_mutex_);
  auto entries = scan_assessments();
  write_index(entries);
  return entries;
}

void Store::put_template(const PromptTemplate& tmpl) {
  auto registry = load_templates();
  registry.add(tmpl);  // enforces monotonic versions
  if (!valid_id(tmpl.template_id)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid template id '" + tmpl.template_id + "'");
  }
  std::lock_guard lock(write_mutex_);
  write_file_atomic(root_ / "templates" /
                        (tmpl.template_id + ".v" + std::to_string(tmpl.version) + ".tmpl"),
                    format_template(tmpl));
}

TemplateRegistry Store::load_templates() const {
  TemplateRegistry registry;
  registry.add(default_template());
  registry.load_directory(root_ / "templates");
  return registry;
}

std::string Store::salt() {
  const auto path = root_ / ".salt";
  std::lock_guard lock(write_mutex_);
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) {
    std::string s = trim(read_file(path));
    if (!s.empty()) return s;
  }
  std::random_device rd;
  std::string seed;
  for (int i = 0; i < 8; ++i) seed += std::to_string(rd()) + ":";
  std::string s = sha256_hex(seed);
  write_file_atomic(path, s + "\n");
  fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write, ec);
  return s;
}

}  // namespace classlens
