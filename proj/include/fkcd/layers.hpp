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

#ifndef FKCD_LAYERS_HPP_
#define FKCD_LAYERS_HPP_

// Parameter storage and the small convolutional building blocks shared by
// the encoder, the difference module, and the decoder.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fkcd/ops.hpp"

namespace fkcd {

enum class TensorKind { kParameter, kBuffer };

template <Real T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
  TensorKind kind = TensorKind::kParameter;
};

// Ordered, uniquely named tensors of one model. Parameters are trainable;
// buffers (batch-norm running statistics) are persisted but never counted as
// parameters.
template <Real T>
class WeightStore {
 public:
  void add(std::string name, Tensor<T> tensor, TensorKind kind);
  const std::vector<NamedTensor<T>>& entries() const { return entries_; }
  std::vector<NamedTensor<T>>& entries() { return entries_; }
  const NamedTensor<T>* find(std::string_view name) const;
  std::int64_t parameter_count() const;
  std::vector<Tensor<T>> parameters() const;

 private:
  std::vector<NamedTensor<T>> entries_;
};

// Registers named tensors in a WeightStore under a dotted path prefix.
template <Real T>
class ParamBuilder {
 public:
  ParamBuilder(WeightStore<T>& store, std::uint64_t seed);

  ParamBuilder scoped(std::string_view name) const;
  std::string path(std::string_view name) const;

  // Uniform(-a, a) with a = gain * sqrt(3 / fan_in), i.e. variance gain^2 / fan_in.
  Tensor<T> weight(std::string_view name, Shape shape, std::int64_t fan_in, double gain = 1.0);
  Tensor<T> constant(std::string_view name, Shape shape, T value);
  Tensor<T> buffer(std::string_view name, Shape shape, T value);

 private:
  ParamBuilder(WeightStore<T>* store, std::shared_ptr<std::mt19937_64> rng, std::string prefix)
      : store_(store), rng_(std::move(rng)), prefix_(std::move(prefix)) {}

  WeightStore<T>* store_;
  std::shared_ptr<std::mt19937_64> rng_;
  std::string prefix_;
};

template <Real T>
struct Conv {
  Tensor<T> weight;
  Tensor<T> bias;  // undefined when bias-free
  std::int64_t stride = 1;
  std::int64_t padding = 0;

  static Conv make(ParamBuilder<T> pb, std::int64_t in_channels, std::int64_t out_channels,
                   std::int64_t kernel, std::int64_t stride, std::int64_t padding, bool with_bias,
                   double gain = 1.0);
  Tensor<T> operator()(const Tensor<T>& x) const {
    return conv2d(x, weight, bias, stride, padding);
  }
};

template <Real T>
struct DepthwiseConv {
  Tensor<T> weight;
  Tensor<T> bias;
  std::int64_t stride = 1;
  std::int64_t padding = 0;

  static DepthwiseConv make(ParamBuilder<T> pb, std::int64_t channels, std::int64_t kernel,
                            std::int64_t stride, std::int64_t padding, double gain = 1.0);
  Tensor<T> operator()(const Tensor<T>& x) const {
    return depthwise_conv2d(x, weight, bias, stride, padding);
  }
};

template <Real T>
struct BatchNorm {
  Tensor<T> gamma;
  Tensor<T> beta;
  // Running statistics change in train mode only; eval-mode calls are read-only.
  mutable BatchNormState<T> state;

  static BatchNorm make(ParamBuilder<T> pb, std::int64_t channels);
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) const {
    return batch_norm2d(x, gamma, beta, state, mode);
  }
};

// Squeeze-and-excitation gate with channel reduction ratio 4 and relu inside.
template <Real T>
struct SqueezeExcite {
  static constexpr std::int64_t kReduction = 4;
  Conv<T> reduce;
  Conv<T> expand;

  static SqueezeExcite make(ParamBuilder<T> pb, std::int64_t channels);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

// se_block as a free function over explicit weights.
template <Real T>
Tensor<T> se_block(const Tensor<T>& x, const Conv<T>& reduce, const Conv<T>& expand);

// 3x3 depthwise conv followed by a 1x1 pointwise conv, both with bias.
template <Real T>
struct DepthwiseSeparable {
  DepthwiseConv<T> depthwise;
  Conv<T> pointwise;

  static DepthwiseSeparable make(ParamBuilder<T> pb, std::int64_t in_channels,
                                 std::int64_t out_channels);
  Tensor<T> operator()(const Tensor<T>& x) const { return pointwise(depthwise(x)); }
};

// O' = MLP(BN(O)) + O with a two-layer pointwise MLP and GELU between.
template <Real T>
struct ChannelMixer {
  BatchNorm<T> norm;
  Conv<T> fc1;
  Conv<T> fc2;

  static ChannelMixer make(ParamBuilder<T> pb, std::int64_t channels, std::int64_t hidden);
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) const;
};

extern template class WeightStore<float>;
extern template class WeightStore<double>;
extern template class ParamBuilder<float>;
extern template class ParamBuilder<double>;

}  // namespace fkcd

#endif  // FKCD_LAYERS_HPP_
