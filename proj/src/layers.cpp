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

#include "fkcd/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace fkcd {

template <Real T>
void WeightStore<T>::add(std::string name, Tensor<T> tensor, TensorKind kind) {
  if (find(name) != nullptr) throw std::logic_error("duplicate tensor name: " + name);
  entries_.push_back(NamedTensor<T>{std::move(name), std::move(tensor), kind});
}

template <Real T>
const NamedTensor<T>* WeightStore<T>::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

template <Real T>
std::int64_t WeightStore<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) {
    if (e.kind == TensorKind::kParameter) n += e.tensor.numel();
  }
  return n;
}

template <Real T>
std::vector<Tensor<T>> WeightStore<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (const auto& e : entries_) {
    if (e.kind == TensorKind::kParameter) out.push_back(e.tensor);
  }
  return out;
}

template <Real T>
ParamBuilder<T>::ParamBuilder(WeightStore<T>& store, std::uint64_t seed)
    : store_(&store), rng_(std::make_shared<std::mt19937_64>(seed)) {}

template <Real T>
ParamBuilder<T> ParamBuilder<T>::scoped(std::string_view name) const {
  return ParamBuilder(store_, rng_, path(name));
}

template <Real T>
std::string ParamBuilder<T>::path(std::string_view name) const {
  return prefix_.empty() ? std::string(name) : prefix_ + "." + std::string(name);
}

template <Real T>
Tensor<T> ParamBuilder<T>::weight(std::string_view name, Shape shape, std::int64_t fan_in,
                                  double gain) {
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = static_cast<T>(dist(*rng_));
  Tensor<T> t(std::move(shape), std::move(data), true);
  store_->add(path(name), t, TensorKind::kParameter);
  return t;
}

template <Real T>
Tensor<T> ParamBuilder<T>::constant(std::string_view name, Shape shape, T value) {
  auto t = Tensor<T>::full(std::move(shape), value, true);
  store_->add(path(name), t, TensorKind::kParameter);
  return t;
}

template <Real T>
Tensor<T> ParamBuilder<T>::buffer(std::string_view name, Shape shape, T value) {
  auto t = Tensor<T>::full(std::move(shape), value, false);
  store_->add(path(name), t, TensorKind::kBuffer);
  return t;
}

template <Real T>
Conv<T> Conv<T>::make(ParamBuilder<T> pb, std::int64_t in_channels, std::int64_t out_channels,
                      std::int64_t kernel, std::int64_t stride, std::int64_t padding,
                      bool with_bias, double gain) {
  Conv c;
  c.weight = pb.weight("weight", {out_channels, in_channels, kernel, kernel},
                       in_channels * kernel * kernel, gain);
  if (with_bias) c.bias = pb.constant("bias", {out_channels}, T(0));
  c.stride = stride;
  c.padding = padding;
  return c;
}

template <Real T>
DepthwiseConv<T> DepthwiseConv<T>::make(ParamBuilder<T> pb, std::int64_t channels,
                                        std::int64_t kernel, std::int64_t stride,
                                        std::int64_t padding, double gain) {
  DepthwiseConv c;
  c.weight = pb.weight("weight", {channels, 1, kernel, kernel}, kernel * kernel, gain);
  c.bias = pb.constant("bias", {channels}, T(0));
  c.stride = stride;
  c.padding = padding;
  return c;
}

template <Real T>
BatchNorm<T> BatchNorm<T>::make(ParamBuilder<T> pb, std::int64_t channels) {
  BatchNorm bn;
  bn.gamma = pb.constant("gamma", {channels}, T(1));
  bn.beta = pb.constant("beta", {channels}, T(0));
  bn.state.running_mean = pb.buffer("running_mean", {channels}, T(0));
  bn.state.running_var = pb.buffer("running_var", {channels}, T(1));
  return bn;
}

template <Real T>
SqueezeExcite<T> SqueezeExcite<T>::make(ParamBuilder<T> pb, std::int64_t channels) {
  if (channels % kReduction != 0) {
    throw ConfigError("squeeze-excite needs a channel count divisible by 4, got " +
                      std::to_string(channels));
  }
  SqueezeExcite se;
  se.reduce = Conv<T>::make(pb.scoped("reduce"), channels, channels / kReduction, 1, 1, 0, true);
  se.expand = Conv<T>::make(pb.scoped("expand"), channels / kReduction, channels, 1, 1, 0, true);
  return se;
}

template <Real T>
Tensor<T> se_block(const Tensor<T>& x, const Conv<T>& reduce, const Conv<T>& expand) {
  if (reduce.weight.dim(1) != x.dim(1) || expand.weight.dim(0) != x.dim(1)) {
    throw ShapeError("se_block: weights " + shape_str(reduce.weight.shape()) + "/" +
                     shape_str(expand.weight.shape()) + " do not match input " +
                     shape_str(x.shape()));
  }
  auto gate = sigmoid(expand(relu(reduce(global_avg_pool(x)))));
  return mul(x, gate);
}

template <Real T>
Tensor<T> SqueezeExcite<T>::operator()(const Tensor<T>& x) const {
  return se_block(x, reduce, expand);
}

template <Real T>
DepthwiseSeparable<T> DepthwiseSeparable<T>::make(ParamBuilder<T> pb, std::int64_t in_channels,
                                                  std::int64_t out_channels) {
  DepthwiseSeparable d;
  d.depthwise = DepthwiseConv<T>::make(pb.scoped("dw"), in_channels, 3, 1, 1);
  d.pointwise = Conv<T>::make(pb.scoped("pw"), in_channels, out_channels, 1, 1, 0, true);
  return d;
}

template <Real T>
ChannelMixer<T> ChannelMixer<T>::make(ParamBuilder<T> pb, std::int64_t channels,
                                      std::int64_t hidden) {
  ChannelMixer m;
  m.norm = BatchNorm<T>::make(pb.scoped("bn"), channels);
  m.fc1 = Conv<T>::make(pb.scoped("fc1"), channels, hidden, 1, 1, 0, true);
  m.fc2 = Conv<T>::make(pb.scoped("fc2"), hidden, channels, 1, 1, 0, true);
  return m;
}

template <Real T>
Tensor<T> ChannelMixer<T>::operator()(const Tensor<T>& x, Mode mode) const {
  return add(fc2(gelu(fc1(norm(x, mode)))), x);
}

template class WeightStore<float>;
template class WeightStore<double>;
template class ParamBuilder<float>;
template class ParamBuilder<double>;
template struct Conv<float>;
template struct Conv<double>;
template struct DepthwiseConv<float>;
template struct DepthwiseConv<double>;
template struct BatchNorm<float>;
template struct BatchNorm<double>;
template struct SqueezeExcite<float>;
template struct SqueezeExcite<double>;
template struct DepthwiseSeparable<float>;
template struct DepthwiseSeparable<double>;
template struct ChannelMixer<float>;
template struct ChannelMixer<double>;
template Tensor<float> se_block(const Tensor<float>&, const Conv<float>&, const Conv<float>&);
template Tensor<double> se_block(const Tensor<double>&, const Conv<double>&, const Conv<double>&);

}  // namespace fkcd
