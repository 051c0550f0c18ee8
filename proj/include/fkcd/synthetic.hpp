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

#ifndef FKCD_SYNTHETIC_HPP_
#define FKCD_SYNTHETIC_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fkcd/image_io.hpp"
#include "json.hpp"

namespace fkcd {

// Generator settings. Sizes are half-extents: rectangle half-sides and disc
// radii are drawn from [min_shape_size, max_shape_size].
struct SyntheticSpec {
  std::uint64_t seed = 42;
  std::int64_t height = 64;
  std::int64_t width = 64;
  std::int64_t n_samples = 250;
  std::int64_t min_base_shapes = 1;
  std::int64_t max_base_shapes = 3;
  std::int64_t min_changed_shapes = 1;  // k, shapes inserted or removed between T1 and T2
  std::int64_t max_changed_shapes = 3;
  std::int64_t min_shape_size = 4;
  std::int64_t max_shape_size = 10;
  // Largest global additive shift of T2, in gray levels.
  std::int64_t brightness_jitter = 30;
  // Amplitude of the static background texture, in gray levels.
  std::int64_t texture_amplitude = 12;

  // Throws ConfigError; sizes must be divisible by 16 and shapes must fit.
  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

struct SyntheticSample {
  Image t1;  // gray
  Image t2;
  Mask gt;
};

struct SyntheticDataset {
  SyntheticSpec spec;
  std::vector<SyntheticSample> samples;
};

// Pixel (x, y) is inside when its centre (x + 0.5, y + 0.5) satisfies
// (px - cx)^2 + (py - cy)^2 < r^2.
Mask rasterize_disc(std::int64_t height, std::int64_t width, double cy, double cx, double radius);
// Half-open box [y0, y1) x [x0, x1), clipped to the frame.
Mask rasterize_rect(std::int64_t height, std::int64_t width, std::int64_t y0, std::int64_t x0,
                    std::int64_t y1, std::int64_t x1);

// Deterministic in spec.seed; each sample draws from its own seeded stream.
SyntheticDataset generate(const SyntheticSpec& spec);
SyntheticSample generate_sample(const SyntheticSpec& spec, std::int64_t index);

// SHA-256 (hex) over spec JSON and every sample's raw pixels in order.
std::string dataset_hash(const SyntheticDataset& dataset);

// Directory of t1_NNNN.pgm, t2_NNNN.pgm, gt_NNNN.pgm and manifest.json.
void save_dataset(const SyntheticDataset& dataset, const std::string& dir);
// Verifies the manifest hash; throws FormatError on mismatch.
SyntheticDataset load_dataset(const std::string& dir);

}  // namespace fkcd

#endif  // FKCD_SYNTHETIC_HPP_
