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

#include <random>

#include "fkcd/errors.hpp"
#include "fkcd/metrics.hpp"

namespace fkcd {
namespace {

// 10x10: 6 tp on row 0, 2 fp and 2 fn on row 1, the rest tn.
std::pair<Mask, Mask> hand_case() {
  Mask pred(10, 10), gt(10, 10);
  for (int x = 0; x < 6; ++x) pred.at(0, x) = gt.at(0, x) = 1;
  pred.at(1, 0) = pred.at(1, 1) = 1;
  gt.at(1, 5) = gt.at(1, 6) = 1;
  return {pred, gt};
}

TEST(Confusion, HandPlacedCounts) {
  auto [pred, gt] = hand_case();
  EXPECT_EQ(confusion(pred, gt), (Confusion{6, 90, 2, 2}));
}

TEST(Confusion, IdentityAndComplement) {
  std::mt19937_64 rng(1);
  Mask gt(8, 8), inv(8, 8);
  for (auto i = 0u; i < gt.pixels.size(); ++i) {
    gt.pixels[i] = rng() & 1;
    inv.pixels[i] = 1 - gt.pixels[i];
  }
  const auto same = confusion(gt, gt);
  EXPECT_EQ(same.fp + same.fn, 0);
  const auto flipped = confusion(inv, gt);
  EXPECT_EQ(flipped.tp + flipped.tn, 0);
  EXPECT_EQ(flipped.total(), 64);
}

TEST(Confusion, InvalidInputsRejected) {
  EXPECT_THROW(confusion(Mask(2, 2), Mask(2, 3)), ShapeError);
  Mask bad(2, 2);
  bad.pixels[0] = 2;
  EXPECT_THROW(confusion(bad, Mask(2, 2)), ShapeError);
}

TEST(Metrics, HandCase) {
  const auto m = metrics(Confusion{6, 90, 2, 2});
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 0.75);
  EXPECT_DOUBLE_EQ(m.f1, 0.75);
  EXPECT_DOUBLE_EQ(m.iou, 0.6);
  EXPECT_DOUBLE_EQ(m.oa, 0.96);
}

TEST(Metrics, PerfectAndDegenerate) {
  const auto perfect = metrics(Confusion{5, 5, 0, 0});
  for (double v : {perfect.precision, perfect.recall, perfect.oa, perfect.f1, perfect.iou}) EXPECT_EQ(v, 1.0);
  const auto empty = metrics(Confusion{0, 10, 0, 0});  // nothing predicted, nothing true
  for (double v : {empty.precision, empty.recall, empty.oa, empty.f1, empty.iou}) EXPECT_EQ(v, 1.0);
  const auto missed = metrics(Confusion{0, 10, 0, 3});  // no predictions, some truth
  EXPECT_EQ(missed.precision, 0.0);
  EXPECT_EQ(missed.recall, 0.0);
  EXPECT_EQ(missed.f1, 0.0);
  const auto all_zero = metrics(Confusion{});
  EXPECT_EQ(all_zero.oa, 1.0);
}

TEST(Metrics, IouIdentityAndRanges) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> d(0, 50);
  for (int i = 0; i < 1000; ++i) {
    Confusion c{d(rng), d(rng), d(rng), d(rng)};
    const auto m = metrics(c);
    for (double v : {m.precision, m.recall, m.oa, m.f1, m.iou}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (c.tp + c.fp + c.fn > 0) EXPECT_NEAR(m.iou, m.f1 / (2 - m.f1), 1e-12);
    if (c.tp + c.fp > 0 && c.tp + c.fn > 0 && m.precision + m.recall > 0) {
      EXPECT_NEAR(m.f1, 2 * m.precision * m.recall / (m.precision + m.recall), 1e-12);
    }
    EXPECT_EQ(m.oa == 1.0, c.fp + c.fn == 0);
  }
}

TEST(Metrics, PublishedScoresConsistency) {
  const std::vector<std::pair<double, double>> rows{
      {83.97, 72.38}, {94.81, 90.14}, {97.63, 95.37}, {86.30, 75.90}};
  for (auto [f1, iou] : rows) EXPECT_LE(std::abs(100 * f1_to_iou(f1 / 100) - iou), 0.02) << f1;
  EXPECT_NEAR(f1_to_iou(0.8397), 0.7237, 1e-4);
}

TEST(Metrics, ReportFields) {
  const auto j = metrics_report(Confusion{6, 90, 2, 2});
  for (const char* k : {"tp", "tn", "fp", "fn", "precision", "recall", "oa", "f1", "iou"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(j["tp"], 6);
  EXPECT_DOUBLE_EQ(j["iou"].get<double>(), 0.6);
}

TEST(DiffMap, Cases) {
  Mask ones(3, 3, 1), zeros(3, 3, 0);
  for (auto c : diff_map(ones, ones).labels) EXPECT_EQ(c, DiffClass::kTruePositive);
  for (auto c : diff_map(ones, zeros).labels) EXPECT_EQ(c, DiffClass::kFalsePositive);
  Mask pred(1, 4), gt(1, 4);
  pred.pixels = {1, 1, 0, 0};
  gt.pixels = {1, 0, 1, 0};
  const auto m = diff_map(pred, gt);
  EXPECT_EQ(m.labels, (std::vector<DiffClass>{DiffClass::kTruePositive, DiffClass::kFalsePositive,
                                              DiffClass::kFalseNegative, DiffClass::kTrueNegative}));
  const auto img = render_diff_map(m);
  ASSERT_EQ(img.channels, 3);
  auto rgb = [&](int x) { return std::array<int, 3>{img.at(0, x, 0), img.at(0, x, 1), img.at(0, x, 2)}; };
  EXPECT_EQ(rgb(0), (std::array<int, 3>{255, 255, 255}));
  EXPECT_EQ(rgb(1), (std::array<int, 3>{0, 255, 0}));
  EXPECT_EQ(rgb(2), (std::array<int, 3>{255, 0, 0}));
  EXPECT_EQ(rgb(3), (std::array<int, 3>{0, 0, 0}));
  EXPECT_THROW(diff_map(Mask(2, 2), Mask(3, 2)), ShapeError);
}

}  // namespace
}  // namespace fkcd
