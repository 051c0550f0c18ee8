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

#include <gtest/gtest.h>

#include <filesystem>

#include "fkcd/errors.hpp"
#include "fkcd/io_util.hpp"
#include "fkcd/synthetic.hpp"
#include "test_util.hpp"

namespace fkcd {
namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.n_samples = 12;
  return s;
}

TEST(Synthetic, SameSeedSameBytes) {
  const auto a = generate(small_spec()), b = generate(small_spec());
  ASSERT_EQ(a.samples.size(), 12u);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].t1, b.samples[i].t1);
    EXPECT_EQ(a.samples[i].t2, b.samples[i].t2);
    EXPECT_EQ(a.samples[i].gt, b.samples[i].gt);
  }
  EXPECT_EQ(dataset_hash(a), dataset_hash(b));
  auto other = small_spec();
  other.seed = 43;
  EXPECT_NE(dataset_hash(generate(other)), dataset_hash(a));
}

TEST(Synthetic, SampleIndependentOfDatasetSize) {
  auto spec = small_spec();
  const auto sample = generate_sample(spec, 5);
  spec.n_samples = 40;
  EXPECT_EQ(generate(spec).samples[5].t2, sample.t2);
}

TEST(Synthetic, NoChangeNoJitterGivesIdenticalPair) {
  auto spec = small_spec();
  spec.min_changed_shapes = spec.max_changed_shapes = 0;
  spec.brightness_jitter = 0;
  for (const auto& s : generate(spec).samples) {
    EXPECT_EQ(s.t1, s.t2);
    EXPECT_EQ(s.gt.count(), 0);
  }
}

TEST(Synthetic, ChangesAreMarked) {
  auto spec = small_spec();
  spec.brightness_jitter = 0;
  for (const auto& s : generate(spec).samples) {
    EXPECT_GT(s.gt.count(), 0);
    for (std::size_t i = 0; i < s.gt.pixels.size(); ++i) {
      if (!s.gt.pixels[i]) EXPECT_EQ(s.t1.pixels[i], s.t2.pixels[i]);
    }
  }
}

TEST(Synthetic, SingleDiscAreaMatchesPointInDiscOracle) {
  const double cy = 20, cx = 31, r = 5;
  const auto disc = rasterize_disc(64, 64, cy, cx, r);
  std::int64_t oracle = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
      if (dy * dy + dx * dx < r * r) ++oracle;
    }
  EXPECT_EQ(disc.count(), oracle);
  EXPECT_GT(oracle, 0);
  // Rectangles are half-open.
  EXPECT_EQ(rasterize_rect(16, 16, 2, 3, 6, 8).count(), 4 * 5);
}

TEST(Synthetic, ValidationAndJson) {
  auto s = small_spec();
  s.height = 60;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.max_shape_size = 40;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.min_changed_shapes = 3;
  s.max_changed_shapes = 1;
  EXPECT_THROW(s.validate(), ConfigError);
  nlohmann::json j = small_spec();
  EXPECT_EQ(j["image_size"], nlohmann::json::array({64, 64}));
  EXPECT_EQ(nlohmann::json(j.get<SyntheticSpec>()), j);
}

TEST(Synthetic, SaveLoadVerifiesHash) {
  testing::TempDir dir;
  const auto ds = generate(small_spec());
  save_dataset(ds, dir.path().string());
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "t1_0000.pgm"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "gt_0011.pgm"));
  const auto back = load_dataset(dir.path().string());
  EXPECT_EQ(dataset_hash(back), dataset_hash(ds));
  auto gt = read_file((dir.path() / "gt_0003.pgm").string());
  gt.back() = static_cast<char>(gt.back() == 0 ? 255 : 0);
  write_file_atomic((dir.path() / "gt_0003.pgm").string(), gt);
  EXPECT_THROW(load_dataset(dir.path().string()), FormatError);
}

}  // namespace
}  // namespace fkcd
