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

#include "fkcd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fkcd/kernels.hpp"

namespace fkcd {

namespace {

constexpr std::int64_t kParallelElems = 1 << 15;

template <Real T>
using ImplPtr = std::shared_ptr<typename Tensor<T>::Impl>;

template <Real T>
void record(std::string_view op, std::vector<ImplPtr<T>> inputs, const Tensor<T>& out,
            typename GradientTape<T>::BackwardFn fn) {
  GradientTape<T>::active()->record(op, std::move(inputs), out.impl(), std::move(fn));
}

template <Real T>
T* grad_of(const ImplPtr<T>& impl) {
  return impl->requires_grad ? grad_buffer<T>(*impl).data() : nullptr;
}

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(what) + " expects a rank-" + std::to_string(rank) +
                     " tensor, got " + shape_str(s));
  }
}

template <Real T>
T stable_sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// Broadcast bookkeeping for a binary op: per-operand strides with 0 on
// stretched dimensions, both aligned to the output rank.
struct Broadcast {
  Shape out;
  std::vector<std::int64_t> stride_a, stride_b;
  bool same = false;
};

Broadcast plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast p;
  p.same = a == b;
  const std::size_t rank = std::max(a.size(), b.size());
  p.out.assign(rank, 1);
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                       " are not broadcast-compatible");
    }
    p.out[i] = std::max(pa[i], pb[i]);
  }
  p.stride_a.assign(rank, 0);
  p.stride_b.assign(rank, 0);
  std::int64_t sa = 1, sb = 1;
  for (std::size_t i = rank; i-- > 0;) {
    p.stride_a[i] = pa[i] == 1 ? 0 : sa;
    p.stride_b[i] = pb[i] == 1 ? 0 : sb;
    sa *= pa[i];
    sb *= pb[i];
  }
  return p;
}

// Calls fn(out_index, a_index, b_index) for every output element in row-major order.
template <typename Fn>
void for_each_broadcast(const Broadcast& p, Fn&& fn) {
  const std::size_t rank = p.out.size();
  const std::int64_t inner = p.out[rank - 1];
  const std::int64_t isa = p.stride_a[rank - 1], isb = p.stride_b[rank - 1];
  const std::int64_t outer = shape_numel(p.out) / inner;
  std::vector<std::int64_t> idx(rank, 0);
  for (std::int64_t o = 0; o < outer; ++o) {
    std::int64_t ia = 0, ib = 0;
    for (std::size_t d = 0; d + 1 < rank; ++d) {
      ia += idx[d] * p.stride_a[d];
      ib += idx[d] * p.stride_b[d];
    }
    for (std::int64_t j = 0; j < inner; ++j) fn(o * inner + j, ia + j * isa, ib + j * isb);
    for (std::size_t d = rank - 1; d-- > 0;) {
      if (++idx[d] < p.out[d]) break;
      idx[d] = 0;
    }
  }
}

enum class BinaryKind { kAdd, kSub, kMul };

template <Real T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, BinaryKind kind, const char* name) {
  const Broadcast plan = plan_broadcast(a.shape(), b.shape(), name);
  auto out = Tensor<T>::zeros(plan.out);
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* po = out.mutable_data().data();
  auto apply = [kind](T x, T y) {
    switch (kind) {
      case BinaryKind::kAdd: return x + y;
      case BinaryKind::kSub: return x - y;
      default: return x * y;
    }
  };
  if (plan.same) {
    const std::int64_t n = out.numel();
#pragma omp parallel for schedule(static) if (n > kParallelElems)
    for (std::int64_t i = 0; i < n; ++i) po[i] = apply(pa[i], pb[i]);
  } else {
    for_each_broadcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t ib) {
      po[o] = apply(pa[ia], pb[ib]);
    });
  }
  if (should_record<T>({&a, &b})) {
    record<T>(name, {a.impl(), b.impl()}, out,
              [ai = a.impl(), bi = b.impl(), plan, kind](std::span<const T> g) {
                T* ga = grad_of<T>(ai);
                T* gb = grad_of<T>(bi);
                const T* va = ai->data.data();
                const T* vb = bi->data.data();
                const T sign_b = kind == BinaryKind::kSub ? T(-1) : T(1);
                if (plan.same) {
                  const auto n = static_cast<std::int64_t>(g.size());
#pragma omp parallel for schedule(static) if (n > kParallelElems)
                  for (std::int64_t i = 0; i < n; ++i) {
                    if (kind == BinaryKind::kMul) {
                      if (ga) ga[i] += g[i] * vb[i];
                      if (gb) gb[i] += g[i] * va[i];
                    } else {
                      if (ga) ga[i] += g[i];
                      if (gb) gb[i] += sign_b * g[i];
                    }
                  }
                  return;
                }
                for_each_broadcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t ib) {
                  if (kind == BinaryKind::kMul) {
                    if (ga) ga[ia] += g[o] * vb[ib];
                    if (gb) gb[ib] += g[o] * va[ia];
                  } else {
                    if (ga) ga[ia] += g[o];
                    if (gb) gb[ib] += sign_b * g[o];
                  }
                });
              });
  }
  return out;
}

// Elementwise unary op; df receives (x, y) and returns dy/dx.
template <Real T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& x, const char* name, F f, DF df) {
  auto out = Tensor<T>::zeros(x.shape());
  const T* px = x.data().data();
  T* po = out.mutable_data().data();
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static) if (n > kParallelElems)
  for (std::int64_t i = 0; i < n; ++i) po[i] = f(px[i]);
  if (should_record<T>({&x})) {
    record<T>(name, {x.impl()}, out, [xi = x.impl(), oi = out.impl(), df](std::span<const T> g) {
      T* gx = grad_of<T>(xi);
      const T* vx = xi->data.data();
      const T* vy = oi->data.data();
      const auto n = static_cast<std::int64_t>(g.size());
#pragma omp parallel for schedule(static) if (n > kParallelElems)
      for (std::int64_t i = 0; i < n; ++i) gx[i] += g[i] * df(vx[i], vy[i]);
    });
  }
  return out;
}

kernels::ConvGeometry conv_geometry(const Shape& in, std::int64_t out_channels,
                                    std::int64_t kernel, std::int64_t stride,
                                    std::int64_t padding) {
  kernels::ConvGeometry g;
  g.batch = in[0];
  g.in_channels = in[1];
  g.in_h = in[2];
  g.in_w = in[3];
  g.out_channels = out_channels;
  g.kernel = kernel;
  g.stride = stride;
  g.padding = padding;
  return g;
}

void check_conv_args(const Shape& in, std::int64_t kernel, std::int64_t stride,
                     std::int64_t padding, const char* op) {
  if (stride < 1) throw ShapeError(std::string(op) + ": stride must be positive");
  if (padding < 0) throw ShapeError(std::string(op) + ": padding must be non-negative");
  if (in[2] + 2 * padding < kernel || in[3] + 2 * padding < kernel) {
    throw ShapeError(std::string(op) + ": kernel " + std::to_string(kernel) +
                     " larger than padded input " + shape_str(in));
  }
}

}  // namespace

template <Real T>
BatchNormState<T> BatchNormState<T>::create(std::int64_t channels) {
  BatchNormState s;
  s.running_mean = Tensor<T>::zeros({channels});
  s.running_var = Tensor<T>::full({channels}, T(1));
  return s;
}

void check_window_geometry(std::int64_t height, std::int64_t width, std::int64_t window,
                           std::int64_t stride) {
  if (stride < 1 || window < stride) {
    throw ShapeError("window spec requires stride >= 1 and window >= stride, got w=" +
                     std::to_string(window) + " s=" + std::to_string(stride));
  }
  if ((window - stride) % 2 != 0) {
    throw ShapeError("window spec requires an even (window - stride), got w=" +
                     std::to_string(window) + " s=" + std::to_string(stride));
  }
  if (height % stride != 0 || width % stride != 0) {
    throw ShapeError("feature map " + std::to_string(height) + "x" + std::to_string(width) +
                     " is not divisible by window stride " + std::to_string(stride));
  }
}

template <Real T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::int64_t stride, std::int64_t padding) {
  require_rank(input.shape(), 4, "conv2d input");
  require_rank(weight.shape(), 4, "conv2d weight");
  const auto& ws = weight.shape();
  if (ws[1] != input.dim(1)) {
    throw ShapeError("conv2d: weight " + shape_str(ws) + " expects " + std::to_string(ws[1]) +
                     " input channels, input " + shape_str(input.shape()) + " has " +
                     std::to_string(input.dim(1)));
  }
  if (ws[2] != ws[3]) throw ShapeError("conv2d: only square kernels are supported");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != ws[0])) {
    throw ShapeError("conv2d: bias " + shape_str(bias.shape()) + " does not match " +
                     std::to_string(ws[0]) + " output channels");
  }
  check_conv_args(input.shape(), ws[2], stride, padding, "conv2d");
  const auto g = conv_geometry(input.shape(), ws[0], ws[2], stride, padding);
  auto out = Tensor<T>::zeros({g.batch, g.out_channels, g.out_h(), g.out_w()});
  kernels::conv2d_forward(g, input.data().data(), weight.data().data(),
                          bias.defined() ? bias.data().data() : nullptr,
                          out.mutable_data().data());
  if (should_record<T>({&input, &weight, &bias})) {
    std::vector<ImplPtr<T>> ins{input.impl(), weight.impl()};
    ImplPtr<T> bi = bias.defined() ? bias.impl() : nullptr;
    if (bi) ins.push_back(bi);
    record<T>("conv2d", std::move(ins), out,
              [g, xi = input.impl(), wi = weight.impl(), bi](std::span<const T> go) {
                if (T* gx = grad_of<T>(xi)) {
                  kernels::conv2d_backward_input(g, go.data(), wi->data.data(), gx);
                }
                if (T* gw = grad_of<T>(wi)) {
                  kernels::conv2d_backward_weight(g, go.data(), xi->data.data(), gw);
                }
                if (bi) {
                  if (T* gb = grad_of<T>(bi)) {
                    kernels::conv_backward_bias(g.batch, g.out_channels, g.out_h() * g.out_w(),
                                                go.data(), gb);
                  }
                }
              });
  }
  return out;
}

template <Real T>
Tensor<T> depthwise_conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                           const Tensor<T>& bias, std::int64_t stride, std::int64_t padding) {
  require_rank(input.shape(), 4, "depthwise_conv2d input");
  require_rank(weight.shape(), 4, "depthwise_conv2d weight");
  const auto& ws = weight.shape();
  if (ws[0] != input.dim(1) || ws[1] != 1) {
    throw ShapeError("depthwise_conv2d: weight " + shape_str(ws) + " does not match " +
                     std::to_string(input.dim(1)) + " input channels (expected C x 1 x k x k)");
  }
  if (ws[2] != ws[3]) throw ShapeError("depthwise_conv2d: only square kernels are supported");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != ws[0])) {
    throw ShapeError("depthwise_conv2d: bias " + shape_str(bias.shape()) +
                     " does not match channel count");
  }
  check_conv_args(input.shape(), ws[2], stride, padding, "depthwise_conv2d");
  const auto g = conv_geometry(input.shape(), ws[0], ws[2], stride, padding);
  auto out = Tensor<T>::zeros({g.batch, g.in_channels, g.out_h(), g.out_w()});
  kernels::depthwise_forward(g, input.data().data(), weight.data().data(),
                             bias.defined() ? bias.data().data() : nullptr,
                             out.mutable_data().data());
  if (should_record<T>({&input, &weight, &bias})) {
    std::vector<ImplPtr<T>> ins{input.impl(), weight.impl()};
    ImplPtr<T> bi = bias.defined() ? bias.impl() : nullptr;
    if (bi) ins.push_back(bi);
    record<T>("depthwise_conv2d", std::move(ins), out,
              [g, xi = input.impl(), wi = weight.impl(), bi](std::span<const T> go) {
                if (T* gx = grad_of<T>(xi)) {
                  kernels::depthwise_backward_input(g, go.data(), wi->data.data(), gx);
                }
                if (T* gw = grad_of<T>(wi)) {
                  kernels::depthwise_backward_weight(g, go.data(), xi->data.data(), gw);
                }
                if (bi) {
                  if (T* gb = grad_of<T>(bi)) {
                    kernels::conv_backward_bias(g.batch, g.in_channels, g.out_h() * g.out_w(),
                                                go.data(), gb);
                  }
                }
              });
  }
  return out;
}

template <Real T>
Tensor<T> batch_norm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                       BatchNormState<T>& state, Mode mode) {
  require_rank(input.shape(), 4, "batch_norm2d input");
  const std::int64_t n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  if (n < 1) throw ShapeError("batch_norm2d: zero-size batch");
  if (gamma.numel() != c || beta.numel() != c || state.running_mean.numel() != c ||
      state.running_var.numel() != c) {
    throw ShapeError("batch_norm2d: parameters do not match " + std::to_string(c) + " channels");
  }
  const std::int64_t count = n * plane;
  std::vector<T> mean(static_cast<std::size_t>(c)), invstd(static_cast<std::size_t>(c));
  const T* x = input.data().data();
  if (mode == Mode::kTrain) {
    std::vector<T> var(static_cast<std::size_t>(c));
#pragma omp parallel for schedule(static) if (count * c > kParallelElems)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      T s = 0;
      for (std::int64_t b = 0; b < n; ++b) {
        const T* p = x + (b * c + ch) * plane;
        for (std::int64_t i = 0; i < plane; ++i) s += p[i];
      }
      const T mu = s / T(count);
      T sq = 0;
      for (std::int64_t b = 0; b < n; ++b) {
        const T* p = x + (b * c + ch) * plane;
        for (std::int64_t i = 0; i < plane; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      mean[ch] = mu;
      var[ch] = sq / T(count);
      invstd[ch] = T(1) / std::sqrt(var[ch] + state.eps);
    }
    auto rm = state.running_mean.mutable_data();
    auto rv = state.running_var.mutable_data();
    const T unbias = count > 1 ? T(count) / T(count - 1) : T(1);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      rm[ch] = (T(1) - state.momentum) * rm[ch] + state.momentum * mean[ch];
      rv[ch] = (T(1) - state.momentum) * rv[ch] + state.momentum * var[ch] * unbias;
    }
  } else {
    const auto rm = state.running_mean.data();
    const auto rv = state.running_var.data();
    for (std::int64_t ch = 0; ch < c; ++ch) {
      mean[ch] = rm[ch];
      invstd[ch] = T(1) / std::sqrt(rv[ch] + state.eps);
    }
  }
  auto out = Tensor<T>::zeros(input.shape());
  T* y = out.mutable_data().data();
  const T* gm = gamma.data().data();
  const T* bt = beta.data().data();
#pragma omp parallel for schedule(static) if (count * c > kParallelElems)
  for (std::int64_t t = 0; t < n * c; ++t) {
    const std::int64_t ch = t % c;
    const T a = gm[ch] * invstd[ch];
    const T b = bt[ch] - mean[ch] * a;
    const T* p = x + t * plane;
    T* q = y + t * plane;
    for (std::int64_t i = 0; i < plane; ++i) q[i] = p[i] * a + b;
  }
  if (should_record<T>({&input, &gamma, &beta})) {
    record<T>("batch_norm2d", {input.impl(), gamma.impl(), beta.impl()}, out,
              [xi = input.impl(), gi = gamma.impl(), bi = beta.impl(), mean, invstd, n, c, plane,
               train = mode == Mode::kTrain](std::span<const T> go) {
                T* gx = grad_of<T>(xi);
                T* gg = grad_of<T>(gi);
                T* gb = grad_of<T>(bi);
                const T* xv = xi->data.data();
                const T* gm = gi->data.data();
                const T cnt = T(n * plane);
#pragma omp parallel for schedule(static) if (n * c * plane > kParallelElems)
                for (std::int64_t ch = 0; ch < c; ++ch) {
                  T sum_g = 0, sum_gx = 0;
                  for (std::int64_t b = 0; b < n; ++b) {
                    const T* p = xv + (b * c + ch) * plane;
                    const T* g = go.data() + (b * c + ch) * plane;
                    for (std::int64_t i = 0; i < plane; ++i) {
                      sum_g += g[i];
                      sum_gx += g[i] * (p[i] - mean[ch]) * invstd[ch];
                    }
                  }
                  if (gg) gg[ch] += sum_gx;
                  if (gb) gb[ch] += sum_g;
                  if (!gx) continue;
                  const T k = gm[ch] * invstd[ch];
                  for (std::int64_t b = 0; b < n; ++b) {
                    const T* p = xv + (b * c + ch) * plane;
                    const T* g = go.data() + (b * c + ch) * plane;
                    T* q = gx + (b * c + ch) * plane;
                    for (std::int64_t i = 0; i < plane; ++i) {
                      if (train) {
                        const T xhat = (p[i] - mean[ch]) * invstd[ch];
                        q[i] += k * (g[i] - sum_g / cnt - xhat * sum_gx / cnt);
                      } else {
                        q[i] += k * g[i];
                      }
                    }
                  }
                }
              });
  }
  return out;
}

template <Real T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::kAdd, "add");
}

template <Real T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::kSub, "sub");
}

template <Real T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::kMul, "mul");
}

template <Real T>
Tensor<T> neg(const Tensor<T>& x) {
  return unary<T>(x, "neg", [](T v) { return -v; }, [](T, T) { return T(-1); });
}

template <Real T>
Tensor<T> abs(const Tensor<T>& x) {
  // Subgradient 0 at the kink, so |a - a| contributes no gradient.
  return unary<T>(
      x, "abs", [](T v) { return std::abs(v); },
      [](T v, T) { return v > 0 ? T(1) : (v < 0 ? T(-1) : T(0)); });
}

template <Real T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary<T>(x, "sigmoid", [](T v) { return stable_sigmoid(v); },
                  [](T, T y) { return y * (T(1) - y); });
}

template <Real T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary<T>(
      x, "relu", [](T v) { return v > 0 ? v : T(0); }, [](T v, T) { return v > 0 ? T(1) : T(0); });
}

template <Real T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T kC = T(0.7978845608028654);  // sqrt(2 / pi)
  constexpr T kA = T(0.044715);
  return unary<T>(
      x, "gelu",
      [](T v) { return T(0.5) * v * (T(1) + std::tanh(kC * (v + kA * v * v * v))); },
      [](T v, T) {
        const T t = std::tanh(kC * (v + kA * v * v * v));
        return T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * kC * (T(1) + T(3) * kA * v * v);
      });
}

template <Real T>
Tensor<T> scale(const Tensor<T>& x, T alpha) {
  return unary<T>(x, "scale", [alpha](T v) { return alpha * v; },
                  [alpha](T, T) { return alpha; });
}

template <Real T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() != a.rank()) {
    throw ShapeError("matmul: operands " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                     " must have equal rank >= 2");
  }
  const int r = a.rank();
  const std::int64_t m = a.dim(r - 2), k = a.dim(r - 1), n = b.dim(r - 1);
  if (b.dim(r - 2) != k) {
    throw ShapeError("matmul: inner dimensions differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  Shape out_shape(a.shape().begin(), a.shape().end() - 2);
  for (int i = 0; i < r - 2; ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw ShapeError("matmul: batch dimensions differ: " + shape_str(a.shape()) + " x " +
                       shape_str(b.shape()));
    }
  }
  const std::int64_t batch = shape_numel(out_shape.empty() ? Shape{1} : out_shape);
  out_shape.push_back(m);
  out_shape.push_back(n);
  auto out = Tensor<T>::zeros(out_shape);
  kernels::matmul_forward(batch, m, k, n, a.data().data(), b.data().data(),
                          out.mutable_data().data());
  if (should_record<T>({&a, &b})) {
    record<T>("matmul", {a.impl(), b.impl()}, out,
              [ai = a.impl(), bi = b.impl(), batch, m, k, n](std::span<const T> g) {
                kernels::matmul_backward(batch, m, k, n, ai->data.data(), bi->data.data(),
                                         g.data(), grad_of<T>(ai), grad_of<T>(bi));
              });
  }
  return out;
}

template <Real T>
Tensor<T> bilinear_upsample(const Tensor<T>& x, std::int64_t factor) {
  if (factor < 1) throw ShapeError("bilinear_upsample: factor must be >= 1");
  if (x.rank() < 2) throw ShapeError("bilinear_upsample: input needs two spatial dims");
  const int r = x.rank();
  const std::int64_t h = x.dim(r - 2), w = x.dim(r - 1);
  const std::int64_t planes = x.numel() / (h * w);
  Shape out_shape = x.shape();
  out_shape[r - 2] = h * factor;
  out_shape[r - 1] = w * factor;
  auto out = Tensor<T>::zeros(out_shape);
  kernels::bilinear_upsample_forward(planes, h, w, factor, x.data().data(),
                                     out.mutable_data().data());
  if (should_record<T>({&x})) {
    record<T>("bilinear_upsample", {x.impl()}, out,
              [xi = x.impl(), planes, h, w, factor](std::span<const T> g) {
                kernels::bilinear_upsample_backward(planes, h, w, factor, g.data(),
                                                    grad_of<T>(xi));
              });
  }
  return out;
}

template <Real T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "global_avg_pool");
  const std::int64_t planes = x.dim(0) * x.dim(1), plane = x.dim(2) * x.dim(3);
  auto out = Tensor<T>::zeros({x.dim(0), x.dim(1), 1, 1});
  const T* px = x.data().data();
  T* po = out.mutable_data().data();
  for (std::int64_t p = 0; p < planes; ++p) {
    T s = 0;
    for (std::int64_t i = 0; i < plane; ++i) s += px[p * plane + i];
    po[p] = s / T(plane);
  }
  if (should_record<T>({&x})) {
    record<T>("global_avg_pool", {x.impl()}, out,
              [xi = x.impl(), planes, plane](std::span<const T> g) {
                T* gx = grad_of<T>(xi);
                for (std::int64_t p = 0; p < planes; ++p) {
                  const T v = g[p] / T(plane);
                  for (std::int64_t i = 0; i < plane; ++i) gx[p * plane + i] += v;
                }
              });
  }
  return out;
}

template <Real T>
Tensor<T> channel_sum(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "channel_sum");
  const std::int64_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  auto out = Tensor<T>::zeros({n, 1, x.dim(2), x.dim(3)});
  const T* px = x.data().data();
  T* po = out.mutable_data().data();
  for (std::int64_t b = 0; b < n; ++b) {
    T* o = po + b * plane;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* p = px + (b * c + ch) * plane;
      for (std::int64_t i = 0; i < plane; ++i) o[i] += p[i];
    }
  }
  if (should_record<T>({&x})) {
    record<T>("channel_sum", {x.impl()}, out, [xi = x.impl(), n, c, plane](std::span<const T> g) {
      T* gx = grad_of<T>(xi);
      for (std::int64_t b = 0; b < n; ++b)
        for (std::int64_t ch = 0; ch < c; ++ch) {
          T* q = gx + (b * c + ch) * plane;
          const T* gg = g.data() + b * plane;
          for (std::int64_t i = 0; i < plane; ++i) q[i] += gg[i];
        }
    });
  }
  return out;
}

template <Real T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = 0;
  for (T v : x.data()) s += v;
  auto out = Tensor<T>::scalar(s);
  if (should_record<T>({&x})) {
    record<T>("sum", {x.impl()}, out, [xi = x.impl()](std::span<const T> g) {
      auto& gx = grad_buffer<T>(*xi);
      for (auto& v : gx) v += g[0];
    });
  }
  return out;
}

template <Real T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / T(x.numel()));
}

template <Real T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Tensor<T> out(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()));
  if (should_record<T>({&x})) {
    record<T>("reshape", {x.impl()}, out, [xi = x.impl()](std::span<const T> g) {
      auto& gx = grad_buffer<T>(*xi);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

template <Real T>
Tensor<T> window_partition(const Tensor<T>& x, std::int64_t window, std::int64_t stride) {
  require_rank(x.shape(), 4, "window_partition");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  check_window_geometry(h, w, window, stride);
  const std::int64_t pad = (window - stride) / 2;
  const std::int64_t nh = h / stride, nw = w / stride, tokens = window * window;
  auto out = Tensor<T>::zeros({n * nh * nw, c, tokens});
  const T* px = x.data().data();
  T* po = out.mutable_data().data();
  const std::int64_t wins = n * nh * nw;
#pragma omp parallel for schedule(static) if (wins * c * tokens > kParallelElems)
  for (std::int64_t win = 0; win < wins; ++win) {
    const std::int64_t b = win / (nh * nw), a = (win / nw) % nh, e = win % nw;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* plane = px + (b * c + ch) * h * w;
      T* dst = po + (win * c + ch) * tokens;
      for (std::int64_t u = 0; u < window; ++u) {
        const std::int64_t y = a * stride - pad + u;
        if (y < 0 || y >= h) continue;
        for (std::int64_t v = 0; v < window; ++v) {
          const std::int64_t xx = e * stride - pad + v;
          if (xx < 0 || xx >= w) continue;
          dst[u * window + v] = plane[y * w + xx];
        }
      }
    }
  }
  if (should_record<T>({&x})) {
    record<T>("window_partition", {x.impl()}, out,
              [xi = x.impl(), n, c, h, w, window, stride, pad, nh, nw, tokens](
                  std::span<const T> g) {
                T* gx = grad_of<T>(xi);
                // One task per input plane keeps overlapping-window sums ordered.
#pragma omp parallel for schedule(static) if (n * nh * nw * c * tokens > kParallelElems)
                for (std::int64_t t = 0; t < n * c; ++t) {
                  const std::int64_t b = t / c, ch = t % c;
                  T* plane = gx + t * h * w;
                  for (std::int64_t a = 0; a < nh; ++a)
                    for (std::int64_t e = 0; e < nw; ++e) {
                      const std::int64_t win = (b * nh + a) * nw + e;
                      const T* src = g.data() + (win * c + ch) * tokens;
                      for (std::int64_t u = 0; u < window; ++u) {
                        const std::int64_t y = a * stride - pad + u;
                        if (y < 0 || y >= h) continue;
                        for (std::int64_t v = 0; v < window; ++v) {
                          const std::int64_t xx = e * stride - pad + v;
                          if (xx < 0 || xx >= w) continue;
                          plane[y * w + xx] += src[u * window + v];
                        }
                      }
                    }
                }
              });
  }
  return out;
}

template <Real T>
Tensor<T> window_merge_center(const Tensor<T>& windows, std::int64_t batch, std::int64_t height,
                              std::int64_t width, std::int64_t window, std::int64_t stride) {
  require_rank(windows.shape(), 3, "window_merge_center");
  check_window_geometry(height, width, window, stride);
  const std::int64_t nh = height / stride, nw = width / stride, tokens = window * window;
  if (windows.dim(0) != batch * nh * nw || windows.dim(2) != tokens) {
    throw ShapeError("window_merge_center: " + shape_str(windows.shape()) +
                     " does not hold the windows of a " + std::to_string(batch) + "x" +
                     std::to_string(height) + "x" + std::to_string(width) + " map");
  }
  const std::int64_t c = windows.dim(1), pad = (window - stride) / 2;
  auto out = Tensor<T>::zeros({batch, c, height, width});
  const T* pw = windows.data().data();
  T* po = out.mutable_data().data();
  const std::int64_t wins = batch * nh * nw;
  // Index map shared by forward and backward: output pixel <- window token.
  auto for_each = [=](auto&& fn) {
#pragma omp parallel for schedule(static) if (wins * c * stride * stride > kParallelElems)
    for (std::int64_t win = 0; win < wins; ++win) {
      const std::int64_t b = win / (nh * nw), a = (win / nw) % nh, e = win % nw;
      for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t u = 0; u < stride; ++u)
          for (std::int64_t v = 0; v < stride; ++v) {
            const std::int64_t dst = ((b * c + ch) * height + a * stride + u) * width + e * stride + v;
            const std::int64_t src = (win * c + ch) * tokens + (u + pad) * window + v + pad;
            fn(dst, src);
          }
    }
  };
  for_each([&](std::int64_t dst, std::int64_t src) { po[dst] = pw[src]; });
  if (should_record<T>({&windows})) {
    record<T>("window_merge_center", {windows.impl()}, out,
              [wi = windows.impl(), for_each](std::span<const T> g) {
                T* gw = grad_of<T>(wi);
                for_each([&](std::int64_t dst, std::int64_t src) { gw[src] += g[dst]; });
              });
  }
  return out;
}

template <Real T>
Tensor<T> sigmoid_attention_core(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v) {
  require_rank(q.shape(), 3, "sigmoid_attention query");
  require_rank(k.shape(), 3, "sigmoid_attention key");
  require_rank(v.shape(), 3, "sigmoid_attention value");
  const std::int64_t batch = q.dim(0), d = q.dim(1), tq = q.dim(2), tk = k.dim(2);
  if (k.dim(0) != batch || v.dim(0) != batch || k.dim(1) != d || v.dim(1) != d ||
      v.dim(2) != tk) {
    throw ShapeError("sigmoid_attention: incompatible q " + shape_str(q.shape()) + ", k " +
                     shape_str(k.shape()) + ", v " + shape_str(v.shape()));
  }
  const T scale_factor = T(1) / std::sqrt(T(d));
  auto out = Tensor<T>::zeros({batch, d, tq});
  std::vector<T> attn(static_cast<std::size_t>(batch * tq * tk));
  kernels::sigmoid_attention_forward(batch, d, tq, tk, scale_factor, q.data().data(),
                                     k.data().data(), v.data().data(), attn.data(),
                                     out.mutable_data().data());
  if (should_record<T>({&q, &k, &v})) {
    record<T>("sigmoid_attention", {q.impl(), k.impl(), v.impl()}, out,
              [qi = q.impl(), ki = k.impl(), vi = v.impl(), attn = std::move(attn), batch, d, tq,
               tk, scale_factor](std::span<const T> g) {
                kernels::sigmoid_attention_backward(
                    batch, d, tq, tk, scale_factor, qi->data.data(), ki->data.data(),
                    vi->data.data(), attn.data(), g.data(), grad_of<T>(qi), grad_of<T>(ki),
                    grad_of<T>(vi));
              });
  }
  return out;
}

template <Real T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets) {
  if (logits.shape() != targets.shape()) {
    throw ShapeError("bce_with_logits: logits " + shape_str(logits.shape()) + " vs targets " +
                     shape_str(targets.shape()));
  }
  const T* z = logits.data().data();
  const T* y = targets.data().data();
  const std::int64_t n = logits.numel();
  T total = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    total += std::max(z[i], T(0)) - z[i] * y[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  auto out = Tensor<T>::scalar(total / T(n));
  if (should_record<T>({&logits, &targets})) {
    record<T>("bce_with_logits", {logits.impl(), targets.impl()}, out,
              [zi = logits.impl(), yi = targets.impl(), n](std::span<const T> g) {
                const T* z = zi->data.data();
                const T* y = yi->data.data();
                if (T* gz = grad_of<T>(zi)) {
                  for (std::int64_t i = 0; i < n; ++i) {
                    gz[i] += g[0] * (stable_sigmoid(z[i]) - y[i]) / T(n);
                  }
                }
                if (T* gy = grad_of<T>(yi)) {
                  for (std::int64_t i = 0; i < n; ++i) gy[i] += -g[0] * z[i] / T(n);
                }
              });
  }
  return out;
}

#define FKCD_INSTANTIATE_OPS(T)                                                                   \
  template struct BatchNormState<T>;                                                              \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                               std::int64_t, std::int64_t);                                       \
  template Tensor<T> depthwise_conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                         std::int64_t, std::int64_t);                             \
  template Tensor<T> batch_norm2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                     BatchNormState<T>&, Mode);                                   \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> neg<T>(const Tensor<T>&);                                                    \
  template Tensor<T> abs<T>(const Tensor<T>&);                                                    \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                                \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                   \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                                   \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                               \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> bilinear_upsample<T>(const Tensor<T>&, std::int64_t);                        \
  template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                                        \
  template Tensor<T> channel_sum<T>(const Tensor<T>&);                                            \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                    \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                   \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                         \
  template Tensor<T> window_partition<T>(const Tensor<T>&, std::int64_t, std::int64_t);           \
  template Tensor<T> window_merge_center<T>(const Tensor<T>&, std::int64_t, std::int64_t,         \
                                            std::int64_t, std::int64_t, std::int64_t);            \
  template Tensor<T> sigmoid_attention_core<T>(const Tensor<T>&, const Tensor<T>&,                \
                                               const Tensor<T>&);                                 \
  template Tensor<T> bce_with_logits<T>(const Tensor<T>&, const Tensor<T>&);

FKCD_INSTANTIATE_OPS(float)
FKCD_INSTANTIATE_OPS(double)

#undef FKCD_INSTANTIATE_OPS

}  // namespace fkcd
