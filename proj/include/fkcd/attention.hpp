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

#ifndef FKCD_ATTENTION_HPP_
#define FKCD_ATTENTION_HPP_

// Sigmoid-normalized attention token mixers: sliding-window (local) and
// patch-pooled global attention, and the fusion block chaining them.

#include <optional>

#include "fkcd/config.hpp"
#include "fkcd/layers.hpp"

namespace fkcd {

// O = sigmoid(Q K^T / sqrt(d)) V + I on channel-major token sets
// (q: B x d x Tq, k and v: B x d x Tk, residual: B x d x Tq). Elementwise
// sigmoid, not softmax: attention rows do not sum to one.
template <Real T>
Tensor<T> sigmoid_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                            const Tensor<T>& residual);

// Q/K/V projection: 3x3 depthwise conv, or a full 1x1 conv when the
// depthwise projections are disabled.
template <Real T>
struct TokenProjection {
  bool full = false;
  DepthwiseConv<T> depthwise;
  Conv<T> pointwise;

  static TokenProjection make(ParamBuilder<T> pb, std::int64_t channels, bool full,
                              double gain = 1.0);
  Tensor<T> operator()(const Tensor<T>& x) const { return full ? pointwise(x) : depthwise(x); }
};

// Sliding-window self-attention. Projected maps are zero-padded by (w - s) / 2,
// cut into (H/s) x (W/s) windows of w x w tokens, attended per window, and the
// central s x s outputs are tiled back before the residual and channel mixer.
template <Real T>
struct SlidingWindowAttention {
  TokenProjection<T> q, k, v;
  ChannelMixer<T> mixer;
  WindowSpec spec;

  static SlidingWindowAttention make(ParamBuilder<T> pb, std::int64_t channels, WindowSpec spec,
                                     bool full_projections);
  Tensor<T> token_mixer(const Tensor<T>& x) const;
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) const;
};

// Global attention from every pixel query to (H/p) x (W/p) key/value tokens,
// each produced by a p x p conv with stride p over one input patch.
template <Real T>
struct GlobalAttention {
  TokenProjection<T> q;
  Conv<T> k, v;
  ChannelMixer<T> mixer;
  std::int64_t patch = 1;

  static GlobalAttention make(ParamBuilder<T> pb, std::int64_t channels, std::int64_t patch,
                              bool full_projections);
  Tensor<T> token_mixer(const Tensor<T>& x) const;
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) const;
};

// Sliding-window attention followed by global attention whose patch size is
// the window stride. A disabled component acts as the identity.
template <Real T>
struct FusionBlock {
  std::optional<SlidingWindowAttention<T>> local;
  std::optional<GlobalAttention<T>> global;

  static FusionBlock make(ParamBuilder<T> pb, std::int64_t channels, WindowSpec spec,
                          bool use_swsa, bool use_egsa, bool full_projections);
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) const;
};

// Free-function forms over explicit weights.
template <Real T>
Tensor<T> swsa(const Tensor<T>& x, const WindowSpec& spec, const SlidingWindowAttention<T>& w,
               Mode mode);
template <Real T>
Tensor<T> egsa(const Tensor<T>& x, std::int64_t patch, const GlobalAttention<T>& w, Mode mode);
template <Real T>
Tensor<T> lgfb(const Tensor<T>& x, const WindowSpec& spec, const FusionBlock<T>& w, Mode mode);

}  // namespace fkcd

#endif  // FKCD_ATTENTION_HPP_
