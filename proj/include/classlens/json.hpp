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

#ifndef CLASSLENS_JSON_HPP_
#define CLASSLENS_JSON_HPP_

#include <json.hpp>

namespace classlens {

// Insertion-ordered so serialized documents are byte-stable.
using Json = nlohmann::ordered_json;

}  // namespace classlens

#endif  // CLASSLENS_JSON_HPP_
