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

#include <algorithm>
#include <cmath>

#include "fkcd/kernels.hpp"

namespace fkcd::kernels::reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                    T* output) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), k = g.kernel;
  for (std::int64_t n = 0; n < g.batch; ++n)
    for (std::int64_t co = 0; co < g.out_channels; ++co)
      for (std::int64_t oh = 0; oh < ho; ++oh)
        for (std::int64_t ow = 0; ow < wo; ++ow) {
          T acc = bias ? bias[co] : T(0);
          for (std::int64_t ci = 0; ci < g.in_channels; ++ci)
            for (std::int64_t kh = 0; kh < k; ++kh)
              for (std::int64_t kw = 0; kw < k; ++kw) {
                const std::int64_t ih = oh * g.stride + kh - g.padding;
                const std::int64_t iw = ow * g.stride + kw - g.padding;
                if (ih < 0 || ih >= g.in_h || iw < 0 || iw >= g.in_w) continue;
                acc += weight[((co * g.in_channels + ci) * k + kh) * k + kw] *
                       input[((n * g.in_channels + ci) * g.in_h + ih) * g.in_w + iw];
              }
          output[((n * g.out_channels + co) * ho + oh) * wo + ow] = acc;
        }
}

template <typename T>
void depthwise_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                       T* output) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), k = g.kernel;
  for (std::int64_t n = 0; n < g.batch; ++n)
    for (std::int64_t c = 0; c < g.in_channels; ++c)
      for (std::int64_t oh = 0; oh < ho; ++oh)
        for (std::int64_t ow = 0; ow < wo; ++ow) {
          T acc = bias ? bias[c] : T(0);
          for (std::int64_t kh = 0; kh < k; ++kh)
            for (std::int64_t kw = 0; kw < k; ++kw) {
              const std::int64_t ih = oh * g.stride + kh - g.padding;
              const std::int64_t iw = ow * g.stride + kw - g.padding;
              if (ih < 0 || ih >= g.in_h || iw < 0 || iw >= g.in_w) continue;
              acc += weight[(c * k + kh) * k + kw] *
                     input[((n * g.in_channels + c) * g.in_h + ih) * g.in_w + iw];
            }
          output[((n * g.in_channels + c) * ho + oh) * wo + ow] = acc;
        }
}

template <typename T>
void matmul_forward(std::int64_t batch, std::int64_t m, std::int64_t k, std::int64_t n,
                    const T* a, const T* b, T* c) {
  for (std::int64_t bi = 0; bi < batch; ++bi)
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < n; ++j) {
        T acc = 0;
        for (std::int64_t kk = 0; kk < k; ++kk)
          acc += a[(bi * m + i) * k + kk] * b[(bi * k + kk) * n + j];
        c[(bi * m + i) * n + j] = acc;
      }
}

template <typename T>
void sigmoid_attention_forward(std::int64_t batch, std::int64_t d, std::int64_t tq,
                               std::int64_t tk, T scale, const T* q, const T* k, const T* v,
                               T* attn, T* out) {
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t i = 0; i < tq; ++i)
      for (std::int64_t j = 0; j < tk; ++j) {
        T dot = 0;
        for (std::int64_t c = 0; c < d; ++c) dot += q[(b * d + c) * tq + i] * k[(b * d + c) * tk + j];
        attn[(b * tq + i) * tk + j] = T(1) / (T(1) + std::exp(-dot * scale));
      }
    for (std::int64_t c = 0; c < d; ++c)
      for (std::int64_t i = 0; i < tq; ++i) {
        T acc = 0;
        for (std::int64_t j = 0; j < tk; ++j)
          acc += attn[(b * tq + i) * tk + j] * v[(b * d + c) * tk + j];
        out[(b * d + c) * tq + i] = acc;
      }
  }
}

template <typename T>
void bilinear_upsample_forward(std::int64_t planes, std::int64_t h, std::int64_t w,
                               std::int64_t factor, const T* input, T* output) {
  const std::int64_t oh = h * factor, ow = w * factor;
  auto coord = [factor](std::int64_t o, std::int64_t extent, std::int64_t& i0, std::int64_t& i1,
                        T& frac) {
    T src = (T(o) + T(0.5)) / T(factor) - T(0.5);
    if (src < 0) src = 0;
    i0 = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(src)), extent - 1);
    i1 = std::min<std::int64_t>(i0 + 1, extent - 1);
    frac = src - T(i0);
  };
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t y = 0; y < oh; ++y)
      for (std::int64_t x = 0; x < ow; ++x) {
        std::int64_t y0, y1, x0, x1;
        T fy, fx;
        coord(y, h, y0, y1, fy);
        coord(x, w, x0, x1, fx);
        const T* in = input + p * h * w;
        output[(p * oh + y) * ow + x] = in[y0 * w + x0] * (1 - fy) * (1 - fx) +
                                        in[y0 * w + x1] * (1 - fy) * fx +
                                        in[y1 * w + x0] * fy * (1 - fx) + in[y1 * w + x1] * fy * fx;
      }
}

#define FKCD_INSTANTIATE_REFERENCE(T)                                                        \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*);    \
  template void depthwise_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*); \
  template void matmul_forward<T>(std::int64_t, std::int64_t, std::int64_t, std::int64_t,    \
                                  const T*, const T*, T*);                                   \
  template void sigmoid_attention_forward<T>(std::int64_t, std::int64_t, std::int64_t,       \
                                             std::int64_t, T, const T*, const T*, const T*,  \
                                             T*, T*);                                        \
  template void bilinear_upsample_forward<T>(std::int64_t, std::int64_t, std::int64_t,       \
                                             std::int64_t, const T*, T*);

FKCD_INSTANTIATE_REFERENCE(float)
FKCD_INSTANTIATE_REFERENCE(double)

#undef FKCD_INSTANTIATE_REFERENCE

}  // namespace fkcd::kernels::reference
