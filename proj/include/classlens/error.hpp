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

#ifndef CLASSLENS_ERROR_HPP_
#define CLASSLENS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace classlens {

enum class ErrorCode {
  kMalformedCsv,
  kMissingColumn,
  kEmptyExport,
  kMissingSalt,
  kInvalidManifest,
  kWrongQuestionKind,
  kUnknownSection,
  kInvalidArgument,
  kNoResponses,
  kTemplateInvalid,
  kProviderTimeout,
  kProviderRefusal,
  kProviderTransport,
  kUnparseableCompletion,
  kSchemaViolation,
  kIoFailure,
  kNotFound,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this type; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace classlens

#endif  // CLASSLENS_ERROR_HPP_
