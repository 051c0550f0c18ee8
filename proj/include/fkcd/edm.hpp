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

#ifndef FKCD_EDM_HPP_
#define FKCD_EDM_HPP_

#include "fkcd/layers.hpp"

namespace fkcd {

// Shared per-stage preprocessing of both temporal features:
// depthwise-separable 3x3 conv -> BN -> GELU -> squeeze-excite -> 1x1 conv to c_d.
template <Real T>
struct EdmPreprocess {
  DepthwiseSeparable<T> local;
  BatchNorm<T> norm;
  SqueezeExcite<T> se;
  Conv<T> project;

  static EdmPreprocess make(ParamBuilder<T> pb, std::int64_t in_channels, std::int64_t c_d);
  Tensor<T> operator()(const Tensor<T>& f, Mode mode) const;
};

// Intermediate tensors of one difference-attention evaluation.
template <Real T>
struct DiffAttentionState {
  Tensor<T> query;     // N x d_k x H x W
  Tensor<T> key;       // N x d_k x H x W
  Tensor<T> logits;    // M: N x 1 x H x W, per-pixel q.k / sqrt(d_k)
  Tensor<T> mask;      // M' = sigmoid(-M)
  Tensor<T> value;     // N x c_d x H x W
  Tensor<T> difference;
};

// Difference attention weights: one 1x1 projection shared by query and key,
// and a bias-free 1x1 value projection of |f1 - f2|.
template <Real T>
struct DifferenceAttention {
  Conv<T> qk;     // undefined weights when the module runs the plain-distance path
  Conv<T> value;

  // with_mask = false builds only the value projection (plain-distance path).
  static DifferenceAttention make(ParamBuilder<T> pb, std::int64_t c_d, std::int64_t d_k,
                                  bool with_mask);
};

// D = sigmoid(-(P(f1) . P(f2)) / sqrt(d_k)) (x) U(|f1 - f2|), mask broadcast over channels.
template <Real T>
DiffAttentionState<T> difference_attention_state(const Tensor<T>& f1p, const Tensor<T>& f2p,
                                                 const DifferenceAttention<T>& weights);
template <Real T>
Tensor<T> difference_attention(const Tensor<T>& f1p, const Tensor<T>& f2p,
                               const DifferenceAttention<T>& weights);

// D = U(|f1 - f2|), the unweighted ablation path.
template <Real T>
Tensor<T> manhattan_difference(const Tensor<T>& f1p, const Tensor<T>& f2p,
                               const DifferenceAttention<T>& weights);

// One stage of the enhanced difference module.
template <Real T>
struct EdmStage {
  EdmPreprocess<T> pre;
  DifferenceAttention<T> attention;
  bool use_mask = true;

  static EdmStage make(ParamBuilder<T> pb, std::int64_t in_channels, std::int64_t c_d,
                       std::int64_t d_k, bool use_mask);
  Tensor<T> operator()(const Tensor<T>& f1, const Tensor<T>& f2, Mode mode) const;
};

}  // namespace fkcd

#endif  // FKCD_EDM_HPP_
