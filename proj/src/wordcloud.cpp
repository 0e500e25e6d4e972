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

#include "classlens/wordcloud.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "classlens/error.hpp"

namespace classlens {

void CloudConfig::validate() const {
  if (canvas_width <= 0 || canvas_height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "canvas dimensions must be positive");
  }
  if (min_font <= 0 || min_font > max_font) {
    throw Error(ErrorCode::kInvalidArgument, "font range must satisfy 0 < min_font <= max_font");
  }
  if (max_terms < 1) throw Error(ErrorCode::kInvalidArgument, "max_terms must be at least 1");
  if (!(rotation_fraction >= 0.0 && rotation_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rotation_fraction must lie in [0, 1]");
  }
}

namespace {

std::size_t code_points(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xc0) != 0x80; }));
}

}  // namespace

BoxSize measure_term(std::string_view term, int font_size, bool rotated) {
  // Integer arithmetic: 0.6*f*n = 6*f*n/10 and 1.2*f = 12*f/10, rounded up.
  const long long chars = static_cast<long long>(code_points(term));
  const long long f = font_size;
  int width = static_cast<int>((6 * f * chars + 9) / 10);
  int height = static_cast<int>((12 * f + 9) / 10);
  if (rotated) std::swap(width, height);
  return {width, height};
}

bool boxes_overlap(const PlacedTerm& a, const PlacedTerm& b) {
  return a.x < b.x + b.width && b.x < a.x + a.width && a.y < b.y + b.height &&
         b.y < a.y + a.height;
}

int font_size_for(std::int64_t count, std::int64_t min_count, std::int64_t max_count,
                  const CloudConfig& config) {
  if (max_count == min_count) return config.max_font;
  double t = static_cast<double>(count - min_count) / static_cast<double>(max_count - min_count);
  double size = config.min_font + (config.max_font - config.min_font) * t;
  return std::clamp(static_cast<int>(std::lround(size)), config.min_font, config.max_font);
}

CloudLayout layout_cloud(const FrequencyProfile& profile, const CloudConfig& config) {
  config.validate();
  CloudLayout layout;
  layout.config = config;
  if (profile.terms.empty()) return layout;

  const std::size_t n = std::min(profile.terms.size(), static_cast<std::size_t>(config.max_terms));
  std::int64_t min_count = profile.terms.front().count;
  std::int64_t max_count = min_count;
  for (std::size_t i = 0; i < n; ++i) {
    min_count = std::min(min_count, profile.terms[i].count);
    max_count = std::max(max_count, profile.terms[i].count);
  }

  SeededRng rng(config.seed);
  const double phase = 2.0 * std::numbers::pi * rng.unit();

  const double cx0 = config.canvas_width / 2.0;
  const double cy0 = config.canvas_height / 2.0;
  // Beyond this radius the box center is off-canvas, so no later step fits.
  const double max_radius = std::hypot(cx0, cy0) + 1.0;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& tc = profile.terms[i];
    PlacedTerm pt;
    pt.term = tc.term;
    pt.count = tc.count;
    pt.font_size = font_size_for(tc.count, min_count, max_count, config);
    pt.rotated = rng.unit() < config.rotation_fraction;
    BoxSize box = measure_term(tc.term, pt.font_size, pt.rotated);
    pt.width = box.width;
    pt.height = box.height;

    bool placed = false;
    if (box.width <= config.canvas_width && box.height <= config.canvas_height) {
      for (int step = 0; step < kSpiralMaxSteps; ++step) {
        const double radius = kSpiralRadiusStep * step;
        if (radius > max_radius) break;
        const double angle = phase + kSpiralAngleStep * step;
        const double cx = cx0 + radius * std::cos(angle);
        const double cy = cy0 + radius * std::sin(angle);
        pt.x = static_cast<int>(std::lround(cx - box.width / 2.0));
        pt.y = static_cast<int>(std::lround(cy - box.height / 2.0));
        if (pt.x < 0 || pt.y < 0 || pt.x + pt.width > config.canvas_width ||
            pt.y + pt.height > config.canvas_height) {
          continue;
        }
        bool collides = std::any_of(layout.placed.begin(), layout.placed.end(),
                                    [&](const PlacedTerm& other) { return boxes_overlap(pt, other); });
        if (!collides) {
          placed = true;
          break;
        }
      }
    }
    if (placed) {
      layout.placed.push_back(std::move(pt));
    } else {
      layout.dropped_terms.push_back(tc.term);
    }
  }
  return layout;
}

Json to_json(const CloudConfig& c) {
  Json j;
  j["canvas_width"] = c.canvas_width;
  j["canvas_height"] = c.canvas_height;
  j["min_font"] = c.min_font;
  j["max_font"] = c.max_font;
  j["max_terms"] = c.max_terms;
  j["seed"] = c.seed;
  j["rotation_fraction"] = c.rotation_fraction;
  return j;
}

Json to_json(const CloudLayout& layout) {
  Json j;
  Json placed = Json::array();
  for (const auto& p : layout.placed) {
    Json jp;
    jp["term"] = p.term;
    jp["count"] = p.count;
    jp["font_size"] = p.font_size;
    jp["x"] = p.x;
    jp["y"] = p.y;
    jp["width"] = p.width;
    jp["height"] = p.height;
    jp["rotated"] = p.rotated;
    placed.push_back(std::move(jp));
  }
  j["placed"] = std::move(placed);
  j["config"] = to_json(layout.config);
  j["dropped_terms"] = layout.dropped_terms;
  return j;
}

}  // namespace classlens
