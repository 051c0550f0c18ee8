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

#ifndef FKCD_REGIONS_HPP_
#define FKCD_REGIONS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fkcd/image_io.hpp"
#include "json.hpp"

namespace fkcd {

// Labels 1..count of the 8-connected components of the 1-pixels, assigned in
// row-major order of each component's first pixel. Background is 0.
struct Labeling {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int32_t count = 0;
  std::vector<std::int32_t> labels;
};

Labeling connected_components(const Mask& mask);

struct Region {
  std::int64_t area = 0;
  // Pixel edges facing a 0-pixel or the image border.
  std::int64_t perimeter = 0;
  double complexity = 0;  // perimeter / area
};

enum class RegionCategory { kFew, kMany };

struct SampleStats {
  std::int64_t region_count = 0;
  RegionCategory category = RegionCategory::kFew;
  double area_ratio = 0;
  std::vector<Region> regions;  // in label order
  std::optional<double> mean_complexity;      // absent without regions
  std::optional<double> complexity_variance;  // population variance, many-category only
};

inline constexpr std::int64_t kDefaultRegionThreshold = 4;

// Samples with at most `threshold` regions are "few".
SampleStats region_stats(const Mask& mask, std::int64_t threshold = kDefaultRegionThreshold);

struct NamedMask {
  std::string name;
  Mask mask;
};

struct DatasetSummary {
  std::int64_t threshold = kDefaultRegionThreshold;
  std::vector<std::string> names;
  std::vector<SampleStats> samples;
  std::int64_t few_count = 0;
  std::int64_t many_count = 0;
  std::optional<double> few_mean_area_ratio;
  std::optional<double> few_mean_complexity;
  std::optional<double> many_mean_variance;
  std::optional<double> many_mean_complexity;
};

// Throws std::invalid_argument on an empty collection. Samples keep input order.
DatasetSummary dataset_summary(const std::vector<NamedMask>& masks,
                               std::int64_t threshold = kDefaultRegionThreshold);

nlohmann::json sample_report(const SampleStats& s);
nlohmann::json summary_report(const DatasetSummary& s);

}  // namespace fkcd

#endif  // FKCD_REGIONS_HPP_
