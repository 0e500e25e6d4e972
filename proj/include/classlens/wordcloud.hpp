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

#ifndef CLASSLENS_WORDCLOUD_HPP_
#define CLASSLENS_WORDCLOUD_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "classlens/analytics.hpp"
#include "classlens/json.hpp"

namespace classlens {

// Layout constants. Changing any of them changes every stored layout.
inline constexpr double kSpiralRadiusStep = 2.0;   // px per step
inline constexpr double kSpiralAngleStep = 0.3;    // rad per step
inline constexpr int kSpiralMaxSteps = 10'000;

struct CloudConfig {
  int canvas_width = 800;
  int canvas_height = 600;
  int min_font = 12;
  int max_font = 64;
  int max_terms = 50;
  std::uint64_t seed = 0;
  double rotation_fraction = 0.2;

  // Throws kInvalidArgument.
  void validate() const;
  bool operator==(const CloudConfig&) const = default;
};

struct BoxSize {
  int width = 0;
  int height = 0;
  bool operator==(const BoxSize&) const = default;
};

// Renderer-independent box model: an unrotated term is
// ceil(0.6 * font * chars) wide and ceil(1.2 * font) tall. Rotation swaps the
// two. Characters are UTF-8 code points.
BoxSize measure_term(std::string_view term, int font_size, bool rotated);

struct PlacedTerm {
  std::string term;
  std::int64_t count = 0;
  int font_size = 0;
  int x = 0;  // top-left
  int y = 0;
  int width = 0;
  int height = 0;
  bool rotated = false;

  bool operator==(const PlacedTerm&) const = default;
};

// Half-open boxes: touching edges do not overlap.
bool boxes_overlap(const PlacedTerm& a, const PlacedTerm& b);

struct CloudLayout {
  std::vector<PlacedTerm> placed;
  CloudConfig config;
  std::vector<std::string> dropped_terms;

  bool operator==(const CloudLayout&) const = default;
};

// Linear font interpolation between min_font and max_font on count, rounded
// to the nearest pixel; max_font everywhere when all counts are equal.
int font_size_for(std::int64_t count, std::int64_t min_count, std::int64_t max_count,
                  const CloudConfig& config);

// Places the top max_terms terms in profile order on an Archimedean spiral
// from the canvas center. The seed picks rotations and the spiral's starting
// phase, so reseeding relays out the same terms at the same sizes.
CloudLayout layout_cloud(const FrequencyProfile& profile, const CloudConfig& config);

Json to_json(const CloudConfig& config);
Json to_json(const CloudLayout& layout);

}  // namespace classlens

#endif  // CLASSLENS_WORDCLOUD_HPP_
