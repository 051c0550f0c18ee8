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

#include "fkcd/metrics.hpp"

#include "fkcd/errors.hpp"

namespace fkcd {

namespace {

void check_pair(const Mask& pred, const Mask& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw ShapeError("prediction is " + std::to_string(pred.height) + "x" +
                     std::to_string(pred.width) + " but ground truth is " +
                     std::to_string(gt.height) + "x" + std::to_string(gt.width));
  }
  check_binary(pred);
  check_binary(gt);
}

double ratio(std::int64_t num, std::int64_t den, bool vacuous) {
  if (den == 0) return vacuous ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

Confusion confusion(const Mask& pred, const Mask& gt) {
  check_pair(pred, gt);
  Confusion c;
  for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
    const bool p = pred.pixels[i], g = gt.pixels[i];
    if (p && g) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (g) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

Metrics metrics(const Confusion& c) {
  const bool no_positives = c.tp + c.fp + c.fn == 0;
  Metrics m;
  m.precision = ratio(c.tp, c.tp + c.fp, no_positives);
  m.recall = ratio(c.tp, c.tp + c.fn, no_positives);
  m.oa = ratio(c.tp + c.tn, c.total(), true);
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, no_positives);
  m.iou = ratio(c.tp, c.tp + c.fp + c.fn, no_positives);
  return m;
}

double f1_to_iou(double f1) { return f1 / (2.0 - f1); }

DiffMap diff_map(const Mask& pred, const Mask& gt) {
  check_pair(pred, gt);
  DiffMap d{pred.height, pred.width, std::vector<DiffClass>(pred.pixels.size())};
  for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
    const bool p = pred.pixels[i], g = gt.pixels[i];
    d.labels[i] = p ? (g ? DiffClass::kTruePositive : DiffClass::kFalsePositive)
                    : (g ? DiffClass::kFalseNegative : DiffClass::kTrueNegative);
  }
  return d;
}

Image render_diff_map(const DiffMap& map) {
  Image img{map.height, map.width, 3, std::vector<std::uint8_t>(map.labels.size() * 3)};
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    std::uint8_t r = 0, g = 0, b = 0;
    switch (map.labels[i]) {
      case DiffClass::kTruePositive: r = g = b = 255; break;
      case DiffClass::kTrueNegative: break;
      case DiffClass::kFalsePositive: g = 255; break;
      case DiffClass::kFalseNegative: r = 255; break;
    }
    img.pixels[3 * i] = r;
    img.pixels[3 * i + 1] = g;
    img.pixels[3 * i + 2] = b;
  }
  return img;
}

nlohmann::json metrics_report(const Confusion& c) {
  const Metrics m = metrics(c);
  return {{"tp", c.tp},          {"tn", c.tn},       {"fp", c.fp}, {"fn", c.fn},
          {"precision", m.precision}, {"recall", m.recall}, {"oa", m.oa}, {"f1", m.f1},
          {"iou", m.iou}};
}

}  // namespace fkcd
