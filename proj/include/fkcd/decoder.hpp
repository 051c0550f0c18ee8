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

#ifndef FKCD_DECODER_HPP_
#define FKCD_DECODER_HPP_

#include <optional>
#include <vector>

#include "fkcd/attention.hpp"
#include "fkcd/config.hpp"

namespace fkcd {

// Difference maps D_1..D_L, shallowest (highest resolution) first, all with
// c_d channels.
template <Real T>
using DifferencePyramid = std::vector<Tensor<T>>;

template <Real T>
struct ChangeMap {
  Tensor<T> logits;         // N x 1 x H x W, before the sigmoid
  Tensor<T> probabilities;  // sigmoid(logits)
  Tensor<T> binary;         // probabilities > threshold, as 0/1
};

// x + GELU(BN(pointwise(depthwise(x)))).
template <Real T>
struct DwsepRefine {
  DepthwiseSeparable<T> sep;
  BatchNorm<T> norm;

  static DwsepRefine make(ParamBuilder<T> pb, std::int64_t channels);
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) const;
};

template <Real T>
Tensor<T> dwsep_refine(const Tensor<T>& x, const DwsepRefine<T>& weights, Mode mode);

// Weights of one decoder level. The deepest level has no fusion stage.
template <Real T>
struct DecoderLevel {
  std::optional<DwsepRefine<T>> refine;
  std::optional<GlobalAttention<T>> fuse_global;
  FusionBlock<T> block;
};

// Bottom-up fusion: the deepest map passes through a fusion block, then each
// shallower level adds its difference map to the x2-upsampled running
// features, refines locally, attends globally, and applies its own fusion
// block. A bias-free 1x1 head and x4 bilinear upsampling give full-resolution
// logits.
template <Real T>
class Decoder {
 public:
  Decoder(ParamBuilder<T> pb, const ModelConfig& config);

  ChangeMap<T> decode(const DifferencePyramid<T>& pyramid, Mode mode) const;

  // Thresholds probabilities with a strict '>' comparison.
  static Tensor<T> binarize(const Tensor<T>& probabilities, double threshold);

 private:
  ModelConfig config_;
  std::vector<DecoderLevel<T>> levels_;  // index 0 = level 1 (shallowest)
  Conv<T> head_;
};

extern template class Decoder<float>;
extern template class Decoder<double>;

}  // namespace fkcd

#endif  // FKCD_DECODER_HPP_
