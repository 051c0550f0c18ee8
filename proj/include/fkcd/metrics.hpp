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

#ifndef FKCD_METRICS_HPP_
#define FKCD_METRICS_HPP_

#include <cstdint>
#include <vector>

#include "fkcd/image_io.hpp"
#include "json.hpp"

namespace fkcd {

// Pixel counts with changed (1) as the positive class.
struct Confusion {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

struct Metrics {
  double precision = 0;
  double recall = 0;
  double oa = 0;
  double f1 = 0;
  double iou = 0;
};

// Both maps must share a shape and hold only 0/1.
Confusion confusion(const Mask& pred, const Mask& gt);

// A ratio with an empty denominator is 1 when prediction and ground truth are
// both free of positives, and 0 otherwise.
Metrics metrics(const Confusion& c);

// IoU implied by an F1 score: f1 / (2 - f1).
double f1_to_iou(double f1);

enum class DiffClass : std::uint8_t { kTrueNegative = 0, kTruePositive, kFalsePositive, kFalseNegative };

struct DiffMap {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<DiffClass> labels;
};

DiffMap diff_map(const Mask& pred, const Mask& gt);
// TP white, TN black, FP green, FN red.
Image render_diff_map(const DiffMap& map);

// {tp, tn, fp, fn, precision, recall, oa, f1, iou}
nlohmann::json metrics_report(const Confusion& c);

}  // namespace fkcd

#endif  // FKCD_METRICS_HPP_
