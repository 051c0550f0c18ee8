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

#include "fkcd/attention.hpp"

namespace fkcd {

template <Real T>
Tensor<T> sigmoid_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                            const Tensor<T>& residual) {
  if (residual.shape() != q.shape()) {
    throw ShapeError("sigmoid_attention: residual " + shape_str(residual.shape()) +
                     " does not match query tokens " + shape_str(q.shape()));
  }
  return add(sigmoid_attention_core(q, k, v), residual);
}

template <Real T>
TokenProjection<T> TokenProjection<T>::make(ParamBuilder<T> pb, std::int64_t channels, bool full,
                                            double gain) {
  TokenProjection p;
  p.full = full;
  if (full) {
    p.pointwise = Conv<T>::make(pb, channels, channels, 1, 1, 0, true, gain);
  } else {
    p.depthwise = DepthwiseConv<T>::make(pb, channels, 3, 1, 1, gain);
  }
  return p;
}

template <Real T>
SlidingWindowAttention<T> SlidingWindowAttention<T>::make(ParamBuilder<T> pb,
                                                          std::int64_t channels, WindowSpec spec,
                                                          bool full_projections) {
  spec.validate();
  SlidingWindowAttention a;
  a.q = TokenProjection<T>::make(pb.scoped("q"), channels, full_projections);
  a.k = TokenProjection<T>::make(pb.scoped("k"), channels, full_projections);
  // Unnormalized sigmoid scores sum to about tokens / 2 per query at init.
  a.v = TokenProjection<T>::make(pb.scoped("v"), channels, full_projections,
                                 2.0 / static_cast<double>(spec.window * spec.window));
  a.mixer = ChannelMixer<T>::make(pb.scoped("mixer"), channels, 2 * channels);
  a.spec = spec;
  return a;
}

template <Real T>
Tensor<T> SlidingWindowAttention<T>::token_mixer(const Tensor<T>& x) const {
  if (x.rank() != 4) throw ShapeError("sliding-window attention expects N x C x H x W");
  const std::int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  check_window_geometry(h, w, spec.window, spec.stride);
  auto qw = window_partition(q(x), spec.window, spec.stride);
  auto kw = window_partition(k(x), spec.window, spec.stride);
  auto vw = window_partition(v(x), spec.window, spec.stride);
  auto o = sigmoid_attention_core(qw, kw, vw);
  return add(window_merge_center(o, n, h, w, spec.window, spec.stride), x);
}

template <Real T>
Tensor<T> SlidingWindowAttention<T>::operator()(const Tensor<T>& x, Mode mode) const {
  return mixer(token_mixer(x), mode);
}

template <Real T>
GlobalAttention<T> GlobalAttention<T>::make(ParamBuilder<T> pb, std::int64_t channels,
                                            std::int64_t patch, bool full_projections) {
  if (patch < 1) throw ConfigError("global attention patch size must be positive");
  GlobalAttention a;
  a.q = TokenProjection<T>::make(pb.scoped("q"), channels, full_projections);
  a.k = Conv<T>::make(pb.scoped("k"), channels, channels, patch, patch, 0, true);
  a.v = Conv<T>::make(pb.scoped("v"), channels, channels, patch, patch, 0, true, 0.25);
  a.mixer = ChannelMixer<T>::make(pb.scoped("mixer"), channels, 2 * channels);
  a.patch = patch;
  return a;
}

template <Real T>
Tensor<T> GlobalAttention<T>::token_mixer(const Tensor<T>& x) const {
  if (x.rank() != 4) throw ShapeError("global attention expects N x C x H x W");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % patch != 0 || w % patch != 0) {
    throw ShapeError("global attention: feature map " + std::to_string(h) + "x" +
                     std::to_string(w) + " is not divisible by patch " + std::to_string(patch));
  }
  const std::int64_t kv_tokens = (h / patch) * (w / patch);
  auto qt = reshape(q(x), {n, c, h * w});
  auto kt = reshape(k(x), {n, c, kv_tokens});
  auto vt = reshape(v(x), {n, c, kv_tokens});
  return add(reshape(sigmoid_attention_core(qt, kt, vt), x.shape()), x);
}

template <Real T>
Tensor<T> GlobalAttention<T>::operator()(const Tensor<T>& x, Mode mode) const {
  return mixer(token_mixer(x), mode);
}

template <Real T>
FusionBlock<T> FusionBlock<T>::make(ParamBuilder<T> pb, std::int64_t channels, WindowSpec spec,
                                    bool use_swsa, bool use_egsa, bool full_projections) {
  FusionBlock b;
  if (use_swsa) {
    b.local = SlidingWindowAttention<T>::make(pb.scoped("swsa"), channels, spec, full_projections);
  }
  if (use_egsa) {
    b.global = GlobalAttention<T>::make(pb.scoped("egsa"), channels, spec.stride, full_projections);
  }
  return b;
}

template <Real T>
Tensor<T> FusionBlock<T>::operator()(const Tensor<T>& x, Mode mode) const {
  auto y = local ? (*local)(x, mode) : x;
  return global ? (*global)(y, mode) : y;
}

template <Real T>
Tensor<T> swsa(const Tensor<T>& x, const WindowSpec& spec, const SlidingWindowAttention<T>& w,
               Mode mode) {
  auto weights = w;
  weights.spec = spec;
  return weights(x, mode);
}

template <Real T>
Tensor<T> egsa(const Tensor<T>& x, std::int64_t patch, const GlobalAttention<T>& w, Mode mode) {
  if (patch != w.patch) {
    throw ShapeError("egsa: key/value convolutions were built for patch " +
                     std::to_string(w.patch) + ", not " + std::to_string(patch));
  }
  return w(x, mode);
}

template <Real T>
Tensor<T> lgfb(const Tensor<T>& x, const WindowSpec& spec, const FusionBlock<T>& w, Mode mode) {
  spec.validate_for(x.dim(2), x.dim(3));
  auto y = w.local ? swsa(x, spec, *w.local, mode) : x;
  return w.global ? egsa(y, spec.stride, *w.global, mode) : y;
}

template struct TokenProjection<float>;
template struct TokenProjection<double>;
template struct SlidingWindowAttention<float>;
template struct SlidingWindowAttention<double>;
template struct GlobalAttention<float>;
template struct GlobalAttention<double>;
template struct FusionBlock<float>;
template struct FusionBlock<double>;

#define FKCD_INSTANTIATE_ATTENTION(T)                                                       \
  template Tensor<T> sigmoid_attention<T>(const Tensor<T>&, const Tensor<T>&,               \
                                          const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> swsa<T>(const Tensor<T>&, const WindowSpec&,                           \
                             const SlidingWindowAttention<T>&, Mode);                       \
  template Tensor<T> egsa<T>(const Tensor<T>&, std::int64_t, const GlobalAttention<T>&, Mode); \
  template Tensor<T> lgfb<T>(const Tensor<T>&, const WindowSpec&, const FusionBlock<T>&, Mode);

FKCD_INSTANTIATE_ATTENTION(float)
FKCD_INSTANTIATE_ATTENTION(double)

#undef FKCD_INSTANTIATE_ATTENTION

}  // namespace fkcd
