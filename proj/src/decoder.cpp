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

#include "fkcd/decoder.hpp"

namespace fkcd {

template <Real T>
DwsepRefine<T> DwsepRefine<T>::make(ParamBuilder<T> pb, std::int64_t channels) {
  DwsepRefine r;
  r.sep = DepthwiseSeparable<T>::make(pb.scoped("sep"), channels, channels);
  r.norm = BatchNorm<T>::make(pb.scoped("bn"), channels);
  return r;
}

template <Real T>
Tensor<T> DwsepRefine<T>::operator()(const Tensor<T>& x, Mode mode) const {
  if (x.rank() != 4 || x.dim(1) != sep.depthwise.weight.dim(0)) {
    throw ShapeError("dwsep_refine expects " + std::to_string(sep.depthwise.weight.dim(0)) +
                     " channels, got " + shape_str(x.shape()));
  }
  return add(x, gelu(norm(sep(x), mode)));
}

template <Real T>
Tensor<T> dwsep_refine(const Tensor<T>& x, const DwsepRefine<T>& weights, Mode mode) {
  return weights(x, mode);
}

template <Real T>
Decoder<T>::Decoder(ParamBuilder<T> pb, const ModelConfig& config) : config_(config) {
  const int levels = config.num_stages();
  for (int level = 1; level <= levels; ++level) {
    auto lp = pb.scoped("level" + std::to_string(level));
    const WindowSpec& spec = config.spec_for_level(level);
    DecoderLevel<T> d;
    if (level < levels) {
      d.refine = DwsepRefine<T>::make(lp.scoped("refine"), config.c_d);
      if (config.use_egsa) {
        d.fuse_global = GlobalAttention<T>::make(lp.scoped("fuse_egsa"), config.c_d, spec.stride,
                                                 config.full_projections);
      }
    }
    d.block = FusionBlock<T>::make(lp.scoped("lgfb"), config.c_d, spec, config.use_swsa,
                                   config.use_egsa, config.full_projections);
    levels_.push_back(std::move(d));
  }
  head_ = Conv<T>::make(pb.scoped("head"), config.c_d, 1, 1, 1, 0, false, 0.1);
}

template <Real T>
Tensor<T> Decoder<T>::binarize(const Tensor<T>& probabilities, double threshold) {
  std::vector<T> bits(probabilities.data().size());
  const auto p = probabilities.data();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = static_cast<double>(p[i]) > threshold ? T(1) : T(0);
  }
  return Tensor<T>(probabilities.shape(), std::move(bits));
}

template <Real T>
ChangeMap<T> Decoder<T>::decode(const DifferencePyramid<T>& pyramid, Mode mode) const {
  const auto levels = levels_.size();
  if (pyramid.size() != levels) {
    throw ShapeError("decoder expects " + std::to_string(levels) + " difference maps, got " +
                     std::to_string(pyramid.size()));
  }
  for (std::size_t l = 0; l < levels; ++l) {
    const auto& d = pyramid[l];
    if (d.rank() != 4 || d.dim(1) != config_.c_d) {
      throw ShapeError("difference map at level " + std::to_string(l + 1) + " must have " +
                       std::to_string(config_.c_d) + " channels, got " + shape_str(d.shape()));
    }
    if (l > 0) {
      const auto& up = pyramid[l - 1];
      if (d.dim(0) != up.dim(0) || up.dim(2) != 2 * d.dim(2) || up.dim(3) != 2 * d.dim(3)) {
        throw ShapeError("difference map at level " + std::to_string(l + 1) + " " +
                         shape_str(d.shape()) + " is not half the resolution of level " +
                         std::to_string(l) + " " + shape_str(up.shape()));
      }
    }
  }
  const int deepest = static_cast<int>(levels);
  auto x = lgfb(pyramid[levels - 1], config_.spec_for_level(deepest), levels_[levels - 1].block,
                mode);
  for (int level = deepest - 1; level >= 1; --level) {
    const auto& lw = levels_[static_cast<std::size_t>(level - 1)];
    x = dwsep_refine(add(bilinear_upsample(x, 2), pyramid[static_cast<std::size_t>(level - 1)]),
                     *lw.refine, mode);
    if (lw.fuse_global) x = egsa(x, config_.spec_for_level(level).stride, *lw.fuse_global, mode);
    x = lgfb(x, config_.spec_for_level(level), lw.block, mode);
  }
  ChangeMap<T> out;
  out.logits = bilinear_upsample(head_(x), 4);
  out.probabilities = sigmoid(out.logits);
  out.binary = binarize(out.probabilities, config_.decoder.threshold);
  return out;
}

template struct DwsepRefine<float>;
template struct DwsepRefine<double>;
template class Decoder<float>;
template class Decoder<double>;
template Tensor<float> dwsep_refine(const Tensor<float>&, const DwsepRefine<float>&, Mode);
template Tensor<double> dwsep_refine(const Tensor<double>&, const DwsepRefine<double>&, Mode);

}  // namespace fkcd
