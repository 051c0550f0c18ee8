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

#ifndef FKCD_OPS_HPP_
#define FKCD_OPS_HPP_

// Differentiable tensor operations. Each op validates shapes, computes its
// result with the kernels in kernels.hpp, and records a backward closure on
// the active GradientTape when any input tracks gradients.

#include <cstdint>

#include "fkcd/tensor.hpp"

namespace fkcd {

enum class Mode { kTrain, kEval };

// Per-channel running statistics owned by a batch-norm layer. Not trainable.
template <Real T>
struct BatchNormState {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  static BatchNormState create(std::int64_t channels);
};

// input N x C_in x H x W, weight C_out x C_in x k x k, bias C_out (may be undefined).
template <Real T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::int64_t stride, std::int64_t padding);

// input N x C x H x W, weight C x 1 x k x k. Channel c of the output reads only
// channel c of the input.
template <Real T>
Tensor<T> depthwise_conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                           const Tensor<T>& bias, std::int64_t stride, std::int64_t padding);

// Train mode normalizes with batch statistics and updates state; eval mode
// uses the running statistics.
template <Real T>
Tensor<T> batch_norm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                       BatchNormState<T>& state, Mode mode);

// Elementwise binary ops with numpy-style broadcasting (size-1 dims stretch).
template <Real T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <Real T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <Real T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <Real T>
Tensor<T> neg(const Tensor<T>& x);
template <Real T>
Tensor<T> abs(const Tensor<T>& x);
template <Real T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <Real T>
Tensor<T> relu(const Tensor<T>& x);
// tanh approximation
template <Real T>
Tensor<T> gelu(const Tensor<T>& x);
template <Real T>
Tensor<T> scale(const Tensor<T>& x, T alpha);

// (..., m, k) x (..., k, n) with identical leading dimensions.
template <Real T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// Integer-factor bilinear upsampling of the last two dims, align-corners off.
template <Real T>
Tensor<T> bilinear_upsample(const Tensor<T>& x, std::int64_t factor);

// N x C x H x W -> N x C x 1 x 1
template <Real T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
// N x C x H x W -> N x 1 x H x W
template <Real T>
Tensor<T> channel_sum(const Tensor<T>& x);

template <Real T>
Tensor<T> sum(const Tensor<T>& x);
template <Real T>
Tensor<T> mean(const Tensor<T>& x);

template <Real T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// Cuts N x C x H x W into (N * H/s * W/s) x C x (w*w) channel-major token
// windows of size w placed at stride s, zero-padding (w - s) / 2 on each side.
template <Real T>
Tensor<T> window_partition(const Tensor<T>& x, std::int64_t window, std::int64_t stride);

// Inverse tiling for window_partition: keeps the central s x s tokens of each
// window and writes them back to an N x C x H x W map.
template <Real T>
Tensor<T> window_merge_center(const Tensor<T>& windows, std::int64_t batch, std::int64_t height,
                              std::int64_t width, std::int64_t window, std::int64_t stride);

// sigmoid(q^T k / sqrt(d)) applied to v, channel-major:
// q: B x d x Tq, k and v: B x d x Tk, result B x d x Tq.
template <Real T>
Tensor<T> sigmoid_attention_core(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v);

// Mean binary cross-entropy over all elements, computed from logits.
template <Real T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets);

// Throws ShapeError unless (window, stride) tile an H x W map.
void check_window_geometry(std::int64_t height, std::int64_t width, std::int64_t window,
                           std::int64_t stride);

}  // namespace fkcd

#endif  // FKCD_OPS_HPP_
