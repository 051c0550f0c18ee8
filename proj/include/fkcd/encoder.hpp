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

#ifndef FKCD_ENCODER_HPP_
#define FKCD_ENCODER_HPP_

#include <optional>
#include <vector>

#include "fkcd/config.hpp"
#include "fkcd/layers.hpp"

namespace fkcd {

// Shape-preserving residual block: x + mixer(BN(token_mixer(x))), where the
// token mixer is a 3x3 depthwise conv (plus squeeze-excite on odd blocks) and
// the mixer is two 1x1 convs with GELU between.
template <Real T>
struct EncoderBlock {
  DepthwiseConv<T> token_mixer;
  std::optional<SqueezeExcite<T>> se;
  BatchNorm<T> norm;
  Conv<T> fc1;
  Conv<T> fc2;

  static EncoderBlock make(ParamBuilder<T> pb, std::int64_t channels, bool with_se);
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) const;
};

// Stride-2 depthwise conv followed by a channel-doubling 1x1 conv and BN.
template <Real T>
struct StageTransition {
  DepthwiseConv<T> depthwise;
  Conv<T> pointwise;
  BatchNorm<T> norm;

  static StageTransition make(ParamBuilder<T> pb, std::int64_t in_channels);
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) const;
};

template <Real T>
struct EncoderStage {
  std::optional<StageTransition<T>> transition;  // absent for the first stage
  std::vector<EncoderBlock<T>> blocks;
};

// Per-stage feature maps of one temporal image, shallowest first.
template <Real T>
struct FeaturePyramid {
  std::vector<Tensor<T>> stages;
};

// Weight-sharing hierarchical encoder. Stage j (1-based) has
// stem_channels * 2^(j-1) channels at 1 / 2^(j+1) of the input resolution.
template <Real T>
class Encoder {
 public:
  Encoder(ParamBuilder<T> pb, const EncoderConfig& config, int num_stages);

  // image: N x input_channels x H x W with H, W divisible by 2^(num_stages+1).
  FeaturePyramid<T> encode(const Tensor<T>& image, Mode mode) const;

  const EncoderConfig& config() const { return config_; }

 private:
  EncoderConfig config_;
  int num_stages_;
  Conv<T> stem1_, stem2_;
  BatchNorm<T> stem_bn1_, stem_bn2_;
  std::vector<EncoderStage<T>> stages_;
};

extern template class Encoder<float>;
extern template class Encoder<double>;

}  // namespace fkcd

#endif  // FKCD_ENCODER_HPP_
