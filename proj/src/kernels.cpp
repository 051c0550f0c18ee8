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

#include "fkcd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fkcd::kernels {

namespace {

// Below this many scalar operations a parallel region costs more than it saves.
constexpr std::int64_t kParallelWork = 1 << 14;

// First and one-past-last output index whose tap (offset from the window
// origin) lands inside [0, extent).
inline void valid_range(std::int64_t tap, std::int64_t stride, std::int64_t padding,
                        std::int64_t extent, std::int64_t out_extent, std::int64_t& lo,
                        std::int64_t& hi) {
  // in = o * stride + tap - padding must satisfy 0 <= in < extent
  const std::int64_t shift = padding - tap;
  lo = shift > 0 ? (shift + stride - 1) / stride : 0;
  const std::int64_t top = extent - 1 + padding - tap;
  hi = top < 0 ? 0 : std::min(out_extent, top / stride + 1);
  if (hi < lo) hi = lo;
}

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_num_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                    T* output) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), k = g.kernel, s = g.stride;
  const std::int64_t in_plane = g.in_h * g.in_w, out_plane = ho * wo;
  const std::int64_t tasks = g.batch * g.out_channels;
  const bool par = tasks * out_plane * g.in_channels * k * k > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t task = 0; task < tasks; ++task) {
    const std::int64_t n = task / g.out_channels, co = task % g.out_channels;
    T* out = output + task * out_plane;
    std::fill(out, out + out_plane, bias ? bias[co] : T(0));
    for (std::int64_t ci = 0; ci < g.in_channels; ++ci) {
      const T* in = input + (n * g.in_channels + ci) * in_plane;
      const T* wk = weight + (co * g.in_channels + ci) * k * k;
      for (std::int64_t kh = 0; kh < k; ++kh) {
        std::int64_t oh0, oh1;
        valid_range(kh, s, g.padding, g.in_h, ho, oh0, oh1);
        for (std::int64_t kw = 0; kw < k; ++kw) {
          const T wv = wk[kh * k + kw];
          std::int64_t ow0, ow1;
          valid_range(kw, s, g.padding, g.in_w, wo, ow0, ow1);
          for (std::int64_t oh = oh0; oh < oh1; ++oh) {
            const T* row = in + (oh * s + kh - g.padding) * g.in_w;
            const std::int64_t off = kw - g.padding;
            T* orow = out + oh * wo;
            if (s == 1) {
              for (std::int64_t ow = ow0; ow < ow1; ++ow) orow[ow] += wv * row[ow + off];
            } else {
              for (std::int64_t ow = ow0; ow < ow1; ++ow) orow[ow] += wv * row[ow * s + off];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight,
                           T* grad_in) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), k = g.kernel, s = g.stride;
  const std::int64_t in_plane = g.in_h * g.in_w, out_plane = ho * wo;
  const std::int64_t tasks = g.batch * g.in_channels;
  const bool par = tasks * out_plane * g.out_channels * k * k > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t task = 0; task < tasks; ++task) {
    const std::int64_t n = task / g.in_channels, ci = task % g.in_channels;
    T* gin = grad_in + task * in_plane;
    for (std::int64_t co = 0; co < g.out_channels; ++co) {
      const T* go = grad_out + (n * g.out_channels + co) * out_plane;
      const T* wk = weight + (co * g.in_channels + ci) * k * k;
      for (std::int64_t kh = 0; kh < k; ++kh) {
        std::int64_t oh0, oh1;
        valid_range(kh, s, g.padding, g.in_h, ho, oh0, oh1);
        for (std::int64_t kw = 0; kw < k; ++kw) {
          const T wv = wk[kh * k + kw];
          std::int64_t ow0, ow1;
          valid_range(kw, s, g.padding, g.in_w, wo, ow0, ow1);
          for (std::int64_t oh = oh0; oh < oh1; ++oh) {
            T* row = gin + (oh * s + kh - g.padding) * g.in_w;
            const std::int64_t off = kw - g.padding;
            const T* grow = go + oh * wo;
            if (s == 1) {
              for (std::int64_t ow = ow0; ow < ow1; ++ow) row[ow + off] += wv * grow[ow];
            } else {
              for (std::int64_t ow = ow0; ow < ow1; ++ow) row[ow * s + off] += wv * grow[ow];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, const T* grad_out, const T* input,
                            T* grad_weight) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), k = g.kernel, s = g.stride;
  const std::int64_t in_plane = g.in_h * g.in_w, out_plane = ho * wo;
  const std::int64_t tasks = g.out_channels * g.in_channels;
  const bool par = tasks * g.batch * out_plane * k * k > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t task = 0; task < tasks; ++task) {
    const std::int64_t co = task / g.in_channels, ci = task % g.in_channels;
    T* gw = grad_weight + task * k * k;
    for (std::int64_t kh = 0; kh < k; ++kh) {
      std::int64_t oh0, oh1;
      valid_range(kh, s, g.padding, g.in_h, ho, oh0, oh1);
      for (std::int64_t kw = 0; kw < k; ++kw) {
        std::int64_t ow0, ow1;
        valid_range(kw, s, g.padding, g.in_w, wo, ow0, ow1);
        T acc = 0;
        for (std::int64_t n = 0; n < g.batch; ++n) {
          const T* in = input + (n * g.in_channels + ci) * in_plane;
          const T* go = grad_out + (n * g.out_channels + co) * out_plane;
          for (std::int64_t oh = oh0; oh < oh1; ++oh) {
            const T* row = in + (oh * s + kh - g.padding) * g.in_w;
            const std::int64_t off = kw - g.padding;
            const T* grow = go + oh * wo;
            if (s == 1) {
              for (std::int64_t ow = ow0; ow < ow1; ++ow) acc += grow[ow] * row[ow + off];
            } else {
              for (std::int64_t ow = ow0; ow < ow1; ++ow) acc += grow[ow] * row[ow * s + off];
            }
          }
        }
        gw[kh * k + kw] += acc;
      }
    }
  }
}

template <typename T>
void depthwise_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                       T* output) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), k = g.kernel, s = g.stride;
  const std::int64_t in_plane = g.in_h * g.in_w, out_plane = ho * wo;
  const std::int64_t tasks = g.batch * g.in_channels;
  const bool par = tasks * out_plane * k * k > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t task = 0; task < tasks; ++task) {
    const std::int64_t c = task % g.in_channels;
    const T* in = input + task * in_plane;
    const T* wk = weight + c * k * k;
    T* out = output + task * out_plane;
    std::fill(out, out + out_plane, bias ? bias[c] : T(0));
    for (std::int64_t kh = 0; kh < k; ++kh) {
      std::int64_t oh0, oh1;
      valid_range(kh, s, g.padding, g.in_h, ho, oh0, oh1);
      for (std::int64_t kw = 0; kw < k; ++kw) {
        const T wv = wk[kh * k + kw];
        std::int64_t ow0, ow1;
        valid_range(kw, s, g.padding, g.in_w, wo, ow0, ow1);
        for (std::int64_t oh = oh0; oh < oh1; ++oh) {
          const T* row = in + (oh * s + kh - g.padding) * g.in_w;
            const std::int64_t off = kw - g.padding;
          T* orow = out + oh * wo;
          if (s == 1) {
            for (std::int64_t ow = ow0; ow < ow1; ++ow) orow[ow] += wv * row[ow + off];
          } else {
            for (std::int64_t ow = ow0; ow < ow1; ++ow) orow[ow] += wv * row[ow * s + off];
          }
        }
      }
    }
  }
}

template <typename T>
void depthwise_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight,
                              T* grad_in) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), k = g.kernel, s = g.stride;
  const std::int64_t in_plane = g.in_h * g.in_w, out_plane = ho * wo;
  const std::int64_t tasks = g.batch * g.in_channels;
  const bool par = tasks * out_plane * k * k > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t task = 0; task < tasks; ++task) {
    const std::int64_t c = task % g.in_channels;
    T* gin = grad_in + task * in_plane;
    const T* go = grad_out + task * out_plane;
    const T* wk = weight + c * k * k;
    for (std::int64_t kh = 0; kh < k; ++kh) {
      std::int64_t oh0, oh1;
      valid_range(kh, s, g.padding, g.in_h, ho, oh0, oh1);
      for (std::int64_t kw = 0; kw < k; ++kw) {
        const T wv = wk[kh * k + kw];
        std::int64_t ow0, ow1;
        valid_range(kw, s, g.padding, g.in_w, wo, ow0, ow1);
        for (std::int64_t oh = oh0; oh < oh1; ++oh) {
          T* row = gin + (oh * s + kh - g.padding) * g.in_w;
            const std::int64_t off = kw - g.padding;
          const T* grow = go + oh * wo;
          if (s == 1) {
            for (std::int64_t ow = ow0; ow < ow1; ++ow) row[ow + off] += wv * grow[ow];
          } else {
            for (std::int64_t ow = ow0; ow < ow1; ++ow) row[ow * s + off] += wv * grow[ow];
          }
        }
      }
    }
  }
}

template <typename T>
void depthwise_backward_weight(const ConvGeometry& g, const T* grad_out, const T* input,
                               T* grad_weight) {
  const std::int64_t ho = g.out_h(), wo = g.out_w(), k = g.kernel, s = g.stride;
  const std::int64_t in_plane = g.in_h * g.in_w, out_plane = ho * wo;
  const bool par = g.in_channels * g.batch * out_plane * k * k > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t c = 0; c < g.in_channels; ++c) {
    T* gw = grad_weight + c * k * k;
    for (std::int64_t kh = 0; kh < k; ++kh) {
      std::int64_t oh0, oh1;
      valid_range(kh, s, g.padding, g.in_h, ho, oh0, oh1);
      for (std::int64_t kw = 0; kw < k; ++kw) {
        std::int64_t ow0, ow1;
        valid_range(kw, s, g.padding, g.in_w, wo, ow0, ow1);
        T acc = 0;
        for (std::int64_t n = 0; n < g.batch; ++n) {
          const T* in = input + (n * g.in_channels + c) * in_plane;
          const T* go = grad_out + (n * g.in_channels + c) * out_plane;
          for (std::int64_t oh = oh0; oh < oh1; ++oh) {
            const T* row = in + (oh * s + kh - g.padding) * g.in_w;
            const std::int64_t off = kw - g.padding;
            const T* grow = go + oh * wo;
            if (s == 1) {
              for (std::int64_t ow = ow0; ow < ow1; ++ow) acc += grow[ow] * row[ow + off];
            } else {
              for (std::int64_t ow = ow0; ow < ow1; ++ow) acc += grow[ow] * row[ow * s + off];
            }
          }
        }
        gw[kh * k + kw] += acc;
      }
    }
  }
}

template <typename T>
void conv_backward_bias(std::int64_t batch, std::int64_t channels, std::int64_t plane,
                        const T* grad_out, T* grad_bias) {
#pragma omp parallel for schedule(static) if (batch * channels * plane > kParallelWork)
  for (std::int64_t c = 0; c < channels; ++c) {
    T acc = 0;
    for (std::int64_t n = 0; n < batch; ++n) {
      const T* go = grad_out + (n * channels + c) * plane;
      for (std::int64_t i = 0; i < plane; ++i) acc += go[i];
    }
    grad_bias[c] += acc;
  }
}

template <typename T>
void matmul_forward(std::int64_t batch, std::int64_t m, std::int64_t k, std::int64_t n,
                    const T* a, const T* b, T* c) {
  const std::int64_t rows = batch * m;
#pragma omp parallel for schedule(static) if (rows * k * n > kParallelWork)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::int64_t bi = r / m;
    const T* arow = a + r * k;
    const T* bm = b + bi * k * n;
    T* crow = c + r * n;
    std::fill(crow, crow + n, T(0));
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      const T* brow = bm + kk * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_backward(std::int64_t batch, std::int64_t m, std::int64_t k, std::int64_t n,
                     const T* a, const T* b, const T* grad_c, T* grad_a, T* grad_b) {
  const bool par = batch * m * k * n > kParallelWork;
  if (grad_a != nullptr) {
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t r = 0; r < batch * m; ++r) {
      const std::int64_t bi = r / m;
      const T* gc = grad_c + r * n;
      const T* bm = b + bi * k * n;
      T* ga = grad_a + r * k;
      for (std::int64_t kk = 0; kk < k; ++kk) {
        const T* brow = bm + kk * n;
        T acc = 0;
        for (std::int64_t j = 0; j < n; ++j) acc += gc[j] * brow[j];
        ga[kk] += acc;
      }
    }
  }
  if (grad_b != nullptr) {
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t r = 0; r < batch * k; ++r) {
      const std::int64_t bi = r / k, kk = r % k;
      const T* am = a + bi * m * k;
      const T* gcm = grad_c + bi * m * n;
      T* gb = grad_b + r * n;
      for (std::int64_t i = 0; i < m; ++i) {
        const T av = am[i * k + kk];
        const T* gc = gcm + i * n;
        for (std::int64_t j = 0; j < n; ++j) gb[j] += av * gc[j];
      }
    }
  }
}

template <typename T>
void sigmoid_attention_forward(std::int64_t batch, std::int64_t d, std::int64_t tq,
                               std::int64_t tk, T scale, const T* q, const T* k, const T* v,
                               T* attn, T* out) {
  const std::int64_t rows = batch * tq;
#pragma omp parallel for schedule(static) if (rows * tk * d > kParallelWork)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::int64_t b = r / tq, i = r % tq;
    const T* qb = q + b * d * tq;
    const T* kb = k + b * d * tk;
    const T* vb = v + b * d * tk;
    T* arow = attn + r * tk;
    std::fill(arow, arow + tk, T(0));
    for (std::int64_t c = 0; c < d; ++c) {
      const T qv = qb[c * tq + i];
      const T* krow = kb + c * tk;
      for (std::int64_t j = 0; j < tk; ++j) arow[j] += qv * krow[j];
    }
    for (std::int64_t j = 0; j < tk; ++j) arow[j] = sigmoid(arow[j] * scale);
    T* ob = out + b * d * tq;
    for (std::int64_t c = 0; c < d; ++c) {
      const T* vrow = vb + c * tk;
      T acc = 0;
      for (std::int64_t j = 0; j < tk; ++j) acc += arow[j] * vrow[j];
      ob[c * tq + i] = acc;
    }
  }
}

template <typename T>
void sigmoid_attention_backward(std::int64_t batch, std::int64_t d, std::int64_t tq,
                                std::int64_t tk, T scale, const T* q, const T* k, const T* v,
                                const T* attn, const T* grad_out, T* grad_q, T* grad_k,
                                T* grad_v) {
  const bool par = batch * tq * tk * d > kParallelWork;
  // Logit gradient, already multiplied by the scale.
  std::vector<T> grad_logits(static_cast<std::size_t>(batch * tq * tk));
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t r = 0; r < batch * tq; ++r) {
    const std::int64_t b = r / tq, i = r % tq;
    const T* vb = v + b * d * tk;
    const T* gob = grad_out + b * d * tq;
    const T* arow = attn + r * tk;
    T* gl = grad_logits.data() + r * tk;
    std::fill(gl, gl + tk, T(0));
    for (std::int64_t c = 0; c < d; ++c) {
      const T g = gob[c * tq + i];
      const T* vrow = vb + c * tk;
      for (std::int64_t j = 0; j < tk; ++j) gl[j] += g * vrow[j];
    }
    for (std::int64_t j = 0; j < tk; ++j) gl[j] *= arow[j] * (T(1) - arow[j]) * scale;
    if (grad_q != nullptr) {
      const T* kb = k + b * d * tk;
      T* gqb = grad_q + b * d * tq;
      for (std::int64_t c = 0; c < d; ++c) {
        const T* krow = kb + c * tk;
        T acc = 0;
        for (std::int64_t j = 0; j < tk; ++j) acc += gl[j] * krow[j];
        gqb[c * tq + i] += acc;
      }
    }
  }
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t r = 0; r < batch * d; ++r) {
    const std::int64_t b = r / d, c = r % d;
    const T* ab = attn + b * tq * tk;
    const T* glb = grad_logits.data() + b * tq * tk;
    const T* gorow = grad_out + b * d * tq + c * tq;
    const T* qrow = q + b * d * tq + c * tq;
    T* gvrow = grad_v != nullptr ? grad_v + b * d * tk + c * tk : nullptr;
    T* gkrow = grad_k != nullptr ? grad_k + b * d * tk + c * tk : nullptr;
    for (std::int64_t i = 0; i < tq; ++i) {
      if (gvrow != nullptr) {
        const T g = gorow[i];
        const T* arow = ab + i * tk;
        for (std::int64_t j = 0; j < tk; ++j) gvrow[j] += g * arow[j];
      }
      if (gkrow != nullptr) {
        const T qv = qrow[i];
        const T* gl = glb + i * tk;
        for (std::int64_t j = 0; j < tk; ++j) gkrow[j] += qv * gl[j];
      }
    }
  }
}

namespace {

struct Tap {
  std::int64_t i0, i1;
  double frac;
};

// Source taps for one output coordinate under the half-pixel convention.
inline Tap upsample_tap(std::int64_t o, std::int64_t factor, std::int64_t extent) {
  double src = (static_cast<double>(o) + 0.5) / static_cast<double>(factor) - 0.5;
  if (src < 0) src = 0;
  auto i0 = static_cast<std::int64_t>(src);
  if (i0 > extent - 1) i0 = extent - 1;
  const std::int64_t i1 = std::min(i0 + 1, extent - 1);
  return {i0, i1, src - static_cast<double>(i0)};
}

}  // namespace

template <typename T>
void bilinear_upsample_forward(std::int64_t planes, std::int64_t h, std::int64_t w,
                               std::int64_t factor, const T* input, T* output) {
  const std::int64_t oh = h * factor, ow = w * factor;
  std::vector<Tap> ty(static_cast<std::size_t>(oh)), tx(static_cast<std::size_t>(ow));
  for (std::int64_t y = 0; y < oh; ++y) ty[y] = upsample_tap(y, factor, h);
  for (std::int64_t x = 0; x < ow; ++x) tx[x] = upsample_tap(x, factor, w);
#pragma omp parallel for schedule(static) if (planes * oh * ow > kParallelWork)
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* in = input + p * h * w;
    T* out = output + p * oh * ow;
    for (std::int64_t y = 0; y < oh; ++y) {
      const Tap& a = ty[y];
      const T fy = static_cast<T>(a.frac);
      const T* r0 = in + a.i0 * w;
      const T* r1 = in + a.i1 * w;
      for (std::int64_t x = 0; x < ow; ++x) {
        const Tap& b = tx[x];
        const T fx = static_cast<T>(b.frac);
        const T top = r0[b.i0] * (T(1) - fx) + r0[b.i1] * fx;
        const T bot = r1[b.i0] * (T(1) - fx) + r1[b.i1] * fx;
        out[y * ow + x] = top * (T(1) - fy) + bot * fy;
      }
    }
  }
}

template <typename T>
void bilinear_upsample_backward(std::int64_t planes, std::int64_t h, std::int64_t w,
                                std::int64_t factor, const T* grad_out, T* grad_in) {
  const std::int64_t oh = h * factor, ow = w * factor;
  std::vector<Tap> ty(static_cast<std::size_t>(oh)), tx(static_cast<std::size_t>(ow));
  for (std::int64_t y = 0; y < oh; ++y) ty[y] = upsample_tap(y, factor, h);
  for (std::int64_t x = 0; x < ow; ++x) tx[x] = upsample_tap(x, factor, w);
#pragma omp parallel for schedule(static) if (planes * oh * ow > kParallelWork)
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* go = grad_out + p * oh * ow;
    T* gi = grad_in + p * h * w;
    for (std::int64_t y = 0; y < oh; ++y) {
      const Tap& a = ty[y];
      const T fy = static_cast<T>(a.frac);
      for (std::int64_t x = 0; x < ow; ++x) {
        const Tap& b = tx[x];
        const T fx = static_cast<T>(b.frac);
        const T g = go[y * ow + x];
        gi[a.i0 * w + b.i0] += g * (T(1) - fy) * (T(1) - fx);
        gi[a.i0 * w + b.i1] += g * (T(1) - fy) * fx;
        gi[a.i1 * w + b.i0] += g * fy * (T(1) - fx);
        gi[a.i1 * w + b.i1] += g * fy * fx;
      }
    }
  }
}

#define FKCD_INSTANTIATE_KERNELS(T)                                                            \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*);      \
  template void conv2d_backward_input<T>(const ConvGeometry&, const T*, const T*, T*);         \
  template void conv2d_backward_weight<T>(const ConvGeometry&, const T*, const T*, T*);        \
  template void depthwise_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*);   \
  template void depthwise_backward_input<T>(const ConvGeometry&, const T*, const T*, T*);      \
  template void depthwise_backward_weight<T>(const ConvGeometry&, const T*, const T*, T*);     \
  template void conv_backward_bias<T>(std::int64_t, std::int64_t, std::int64_t, const T*, T*); \
  template void matmul_forward<T>(std::int64_t, std::int64_t, std::int64_t, std::int64_t,      \
                                  const T*, const T*, T*);                                     \
  template void matmul_backward<T>(std::int64_t, std::int64_t, std::int64_t, std::int64_t,     \
                                   const T*, const T*, const T*, T*, T*);                      \
  template void sigmoid_attention_forward<T>(std::int64_t, std::int64_t, std::int64_t,         \
                                             std::int64_t, T, const T*, const T*, const T*,    \
                                             T*, T*);                                          \
  template void sigmoid_attention_backward<T>(std::int64_t, std::int64_t, std::int64_t,        \
                                              std::int64_t, T, const T*, const T*, const T*,   \
                                              const T*, const T*, T*, T*, T*);                 \
  template void bilinear_upsample_forward<T>(std::int64_t, std::int64_t, std::int64_t,         \
                                             std::int64_t, const T*, T*);                      \
  template void bilinear_upsample_backward<T>(std::int64_t, std::int64_t, std::int64_t,        \
                                              std::int64_t, const T*, T*);

FKCD_INSTANTIATE_KERNELS(float)
FKCD_INSTANTIATE_KERNELS(double)

#undef FKCD_INSTANTIATE_KERNELS

}  // namespace fkcd::kernels
