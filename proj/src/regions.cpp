/* Copyright 2026 The fkcd Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "fkcd/regions.hpp"

#include <stdexcept>

#include "fkcd/errors.hpp"

namespace fkcd {

Labeling connected_components(const Mask& mask) {
  check_binary(mask);
  const std::int64_t h = mask.height, w = mask.width;
  Labeling out{h, w, 0, std::vector<std::int32_t>(mask.pixels.size(), 0)};
  std::vector<std::int64_t> stack;
  for (std::int64_t start = 0; start < h * w; ++start) {
    if (!mask.pixels[static_cast<std::size_t>(start)] || out.labels[static_cast<std::size_t>(start)]) {
      continue;
    }
    const std::int32_t label = ++out.count;
    out.labels[static_cast<std::size_t>(start)] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::int64_t p = stack.back();
      stack.pop_back();
      const std::int64_t y = p / w, x = p % w;
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const std::int64_t ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          const auto q = static_cast<std::size_t>(ny * w + nx);
          if (mask.pixels[q] && !out.labels[q]) {
            out.labels[q] = label;
            stack.push_back(static_cast<std::int64_t>(q));
          }
        }
      }
    }
  }
  return out;
}

SampleStats region_stats(const Mask& mask, std::int64_t threshold) {
  const Labeling lab = connected_components(mask);
  const std::int64_t h = mask.height, w = mask.width;
  SampleStats s;
  s.region_count = lab.count;
  s.category = lab.count <= threshold ? RegionCategory::kFew : RegionCategory::kMany;
  s.regions.resize(static_cast<std::size_t>(lab.count));
  std::int64_t changed = 0;
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int32_t l = lab.labels[static_cast<std::size_t>(y * w + x)];
      if (!l) continue;
      ++changed;
      Region& r = s.regions[static_cast<std::size_t>(l - 1)];
      ++r.area;
      const std::int64_t ny[4] = {y - 1, y + 1, y, y};
      const std::int64_t nx[4] = {x, x, x - 1, x + 1};
      for (int k = 0; k < 4; ++k) {
        const bool outside = ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w;
        if (outside || !mask.at(ny[k], nx[k])) ++r.perimeter;
      }
    }
  }
  s.area_ratio = static_cast<double>(changed) / static_cast<double>(h * w);
  if (lab.count > 0) {
    double sum = 0;
    for (auto& r : s.regions) {
      r.complexity = static_cast<double>(r.perimeter) / static_cast<double>(r.area);
      sum += r.complexity;
    }
    const double mean = sum / static_cast<double>(lab.count);
    s.mean_complexity = mean;
    if (s.category == RegionCategory::kMany) {
      double ss = 0;
      for (const auto& r : s.regions) ss += (r.complexity - mean) * (r.complexity - mean);
      s.complexity_variance = ss / static_cast<double>(lab.count);
    }
  }
  return s;
}

namespace {

struct Mean {
  double sum = 0;
  std::int64_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> value() const {
    return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
  }
};

}  // namespace

DatasetSummary dataset_summary(const std::vector<NamedMask>& masks, std::int64_t threshold) {
  if (masks.empty()) throw std::invalid_argument("dataset_summary needs at least one mask");
  DatasetSummary d;
  d.threshold = threshold;
  Mean few_area, few_cx, many_var, many_cx;
  for (const auto& m : masks) {
    SampleStats s = region_stats(m.mask, threshold);
    if (s.category == RegionCategory::kFew) {
      ++d.few_count;
      few_area.add(s.area_ratio);
      if (s.mean_complexity) few_cx.add(*s.mean_complexity);
    } else {
      ++d.many_count;
      many_var.add(*s.complexity_variance);
      many_cx.add(*s.mean_complexity);
    }
    d.names.push_back(m.name);
    d.samples.push_back(std::move(s));
  }
  d.few_mean_area_ratio = few_area.value();
  d.few_mean_complexity = few_cx.value();
  d.many_mean_variance = many_var.value();
  d.many_mean_complexity = many_cx.value();
  return d;
}

namespace {

void put_optional(nlohmann::json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}

}  // namespace

nlohmann::json sample_report(const SampleStats& s) {
  nlohmann::json j;
  j["region_count"] = s.region_count;
  j["category"] = s.category == RegionCategory::kFew ? "few" : "many";
  j["area_ratio"] = s.area_ratio;
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : s.regions) {
    regions.push_back({{"area", r.area}, {"perimeter", r.perimeter}, {"complexity", r.complexity}});
  }
  j["regions"] = regions;
  put_optional(j, "mean_complexity", s.mean_complexity);
  put_optional(j, "complexity_variance", s.complexity_variance);
  return j;
}

nlohmann::json summary_report(const DatasetSummary& s) {
  nlohmann::json j;
  j["threshold"] = s.threshold;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    auto row = sample_report(s.samples[i]);
    row["name"] = s.names[i];
    rows.push_back(std::move(row));
  }
  j["samples"] = rows;
  nlohmann::json few{{"count", s.few_count}}, many{{"count", s.many_count}};
  put_optional(few, "mean_area_ratio", s.few_mean_area_ratio);
  put_optional(few, "mean_complexity", s.few_mean_complexity);
  put_optional(many, "mean_complexity_variance", s.many_mean_variance);
  put_optional(many, "mean_complexity", s.many_mean_complexity);
  j["few"] = few;
  j["many"] = many;
  return j;
}

}  // namespace fkcd
