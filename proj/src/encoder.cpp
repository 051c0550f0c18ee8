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

#include "fkcd/encoder.hpp"

namespace fkcd {

template <Real T>
EncoderBlock<T> EncoderBlock<T>::make(ParamBuilder<T> pb, std::int64_t channels, bool with_se) {
  EncoderBlock b;
  b.token_mixer = DepthwiseConv<T>::make(pb.scoped("dw"), channels, 3, 1, 1);
  if (with_se) b.se = SqueezeExcite<T>::make(pb.scoped("se"), channels);
  b.norm = BatchNorm<T>::make(pb.scoped("bn"), channels);
  b.fc1 = Conv<T>::make(pb.scoped("fc1"), channels, channels, 1, 1, 0, true);
  b.fc2 = Conv<T>::make(pb.scoped("fc2"), channels, channels, 1, 1, 0, true);
  return b;
}

template <Real T>
Tensor<T> EncoderBlock<T>::operator()(const Tensor<T>& x, Mode mode) const {
  if (x.rank() != 4 || x.dim(1) != token_mixer.weight.dim(0)) {
    throw ShapeError("encoder block expects " + std::to_string(token_mixer.weight.dim(0)) +
                     " channels, got input " + shape_str(x.shape()));
  }
  auto t = token_mixer(x);
  if (se) t = (*se)(t);
  return add(x, fc2(gelu(fc1(norm(t, mode)))));
}

template <Real T>
StageTransition<T> StageTransition<T>::make(ParamBuilder<T> pb, std::int64_t in_channels) {
  StageTransition s;
  s.depthwise = DepthwiseConv<T>::make(pb.scoped("dw"), in_channels, 3, 2, 1);
  s.pointwise = Conv<T>::make(pb.scoped("pw"), in_channels, 2 * in_channels, 1, 1, 0, true);
  s.norm = BatchNorm<T>::make(pb.scoped("bn"), 2 * in_channels);
  return s;
}

template <Real T>
Tensor<T> StageTransition<T>::operator()(const Tensor<T>& x, Mode mode) const {
  return norm(pointwise(depthwise(x)), mode);
}

template <Real T>
Encoder<T>::Encoder(ParamBuilder<T> pb, const EncoderConfig& config, int num_stages)
    : config_(config), num_stages_(num_stages) {
  const std::int64_t c = config.stem_channels;
  auto stem = pb.scoped("stem");
  stem1_ = Conv<T>::make(stem.scoped("conv1"), config.input_channels, c, 3, 2, 1, true);
  stem_bn1_ = BatchNorm<T>::make(stem.scoped("bn1"), c);
  stem2_ = Conv<T>::make(stem.scoped("conv2"), c, c, 3, 2, 1, true);
  stem_bn2_ = BatchNorm<T>::make(stem.scoped("bn2"), c);
  for (int s = 0; s < num_stages; ++s) {
    auto sp = pb.scoped("stage" + std::to_string(s + 1));
    EncoderStage<T> stage;
    const std::int64_t ch = config.stage_channels(s);
    if (s > 0) stage.transition = StageTransition<T>::make(sp.scoped("down"), ch / 2);
    for (std::int64_t b = 0; b < config.stage_depths[static_cast<std::size_t>(s)]; ++b) {
      stage.blocks.push_back(
          EncoderBlock<T>::make(sp.scoped("block" + std::to_string(b)), ch, b % 2 == 1));
    }
    stages_.push_back(std::move(stage));
  }
}

template <Real T>
FeaturePyramid<T> Encoder<T>::encode(const Tensor<T>& image, Mode mode) const {
  if (image.rank() != 4 || image.dim(1) != config_.input_channels) {
    throw ShapeError("encoder expects N x " + std::to_string(config_.input_channels) +
                     " x H x W input, got " + shape_str(image.shape()));
  }
  const std::int64_t div = std::int64_t{1} << (num_stages_ + 1);
  if (image.dim(2) % div != 0 || image.dim(3) % div != 0) {
    throw ShapeError("input height and width must be divisible by " + std::to_string(div) +
                     ", got " + shape_str(image.shape()));
  }
  auto x = gelu(stem_bn1_(stem1_(image), mode));
  x = gelu(stem_bn2_(stem2_(x), mode));
  FeaturePyramid<T> out;
  for (const auto& stage : stages_) {
    if (stage.transition) x = (*stage.transition)(x, mode);
    for (const auto& block : stage.blocks) x = block(x, mode);
    out.stages.push_back(x);
  }
  return out;
}

template struct EncoderBlock<float>;
template struct EncoderBlock<double>;
template struct StageTransition<float>;
template struct StageTransition<double>;
template class Encoder<float>;
template class Encoder<double>;

}  // namespace fkcd
