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

#include "fkcd/edm.hpp"

#include <cmath>

namespace fkcd {

template <Real T>
EdmPreprocess<T> EdmPreprocess<T>::make(ParamBuilder<T> pb, std::int64_t in_channels,
                                        std::int64_t c_d) {
  EdmPreprocess p;
  p.local = DepthwiseSeparable<T>::make(pb.scoped("sep"), in_channels, in_channels);
  p.norm = BatchNorm<T>::make(pb.scoped("bn"), in_channels);
  p.se = SqueezeExcite<T>::make(pb.scoped("se"), in_channels);
  p.project = Conv<T>::make(pb.scoped("proj"), in_channels, c_d, 1, 1, 0, true);
  return p;
}

template <Real T>
Tensor<T> EdmPreprocess<T>::operator()(const Tensor<T>& f, Mode mode) const {
  if (f.rank() != 4 || f.dim(1) != local.depthwise.weight.dim(0)) {
    throw ShapeError("difference preprocessing expects " +
                     std::to_string(local.depthwise.weight.dim(0)) + " channels, got " +
                     shape_str(f.shape()));
  }
  return project(se(gelu(norm(local(f), mode))));
}

template <Real T>
DifferenceAttention<T> DifferenceAttention<T>::make(ParamBuilder<T> pb, std::int64_t c_d,
                                                    std::int64_t d_k, bool with_mask) {
  DifferenceAttention a;
  if (with_mask) a.qk = Conv<T>::make(pb.scoped("qk"), c_d, d_k, 1, 1, 0, true);
  a.value = Conv<T>::make(pb.scoped("value"), c_d, c_d, 1, 1, 0, false);
  return a;
}

namespace {

template <Real T>
void check_pair(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("difference inputs differ in shape: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

}  // namespace

template <Real T>
DiffAttentionState<T> difference_attention_state(const Tensor<T>& f1p, const Tensor<T>& f2p,
                                                 const DifferenceAttention<T>& weights) {
  check_pair(f1p, f2p);
  if (!weights.qk.weight.defined()) {
    throw std::logic_error("difference attention called without a query/key projection");
  }
  DiffAttentionState<T> s;
  s.query = weights.qk(f1p);
  s.key = weights.qk(f2p);
  const T inv_sqrt_d = T(1) / std::sqrt(T(s.query.dim(1)));
  s.logits = scale(channel_sum(mul(s.query, s.key)), inv_sqrt_d);
  s.mask = sigmoid(neg(s.logits));
  s.value = weights.value(abs(sub(f1p, f2p)));
  s.difference = mul(s.value, s.mask);
  return s;
}

template <Real T>
Tensor<T> difference_attention(const Tensor<T>& f1p, const Tensor<T>& f2p,
                               const DifferenceAttention<T>& weights) {
  return difference_attention_state(f1p, f2p, weights).difference;
}

template <Real T>
Tensor<T> manhattan_difference(const Tensor<T>& f1p, const Tensor<T>& f2p,
                               const DifferenceAttention<T>& weights) {
  check_pair(f1p, f2p);
  return weights.value(abs(sub(f1p, f2p)));
}

template <Real T>
EdmStage<T> EdmStage<T>::make(ParamBuilder<T> pb, std::int64_t in_channels, std::int64_t c_d,
                              std::int64_t d_k, bool use_mask) {
  EdmStage s;
  s.pre = EdmPreprocess<T>::make(pb.scoped("pre"), in_channels, c_d);
  s.attention = DifferenceAttention<T>::make(pb, c_d, d_k, use_mask);
  s.use_mask = use_mask;
  return s;
}

template <Real T>
Tensor<T> EdmStage<T>::operator()(const Tensor<T>& f1, const Tensor<T>& f2, Mode mode) const {
  check_pair(f1, f2);
  auto a = pre(f1, mode);
  auto b = pre(f2, mode);
  return use_mask ? difference_attention(a, b, attention) : manhattan_difference(a, b, attention);
}

template struct EdmPreprocess<float>;
template struct EdmPreprocess<double>;
template struct DifferenceAttention<float>;
template struct DifferenceAttention<double>;
template struct EdmStage<float>;
template struct EdmStage<double>;
template DiffAttentionState<float> difference_attention_state(const Tensor<float>&,
                                                              const Tensor<float>&,
                                                              const DifferenceAttention<float>&);
template DiffAttentionState<double> difference_attention_state(const Tensor<double>&,
                                                               const Tensor<double>&,
                                                               const DifferenceAttention<double>&);
template Tensor<float> difference_attention(const Tensor<float>&, const Tensor<float>&,
                                            const DifferenceAttention<float>&);
template Tensor<double> difference_attention(const Tensor<double>&, const Tensor<double>&,
                                             const DifferenceAttention<double>&);
template Tensor<float> manhattan_difference(const Tensor<float>&, const Tensor<float>&,
                                            const DifferenceAttention<float>&);
template Tensor<double> manhattan_difference(const Tensor<double>&, const Tensor<double>&,
                                             const DifferenceAttention<double>&);

}  // namespace fkcd
