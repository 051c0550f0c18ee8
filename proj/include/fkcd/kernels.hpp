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

#ifndef FKCD_KERNELS_HPP_
#define FKCD_KERNELS_HPP_

// Raw dense kernels behind the differentiable ops. The default namespace holds
// the OpenMP-parallel versions; kernels::reference holds the serial loops they
// are checked and benchmarked against.
//
// Every parallel kernel assigns each output element to exactly one thread and
// accumulates in a fixed order, so results do not depend on the thread count.

#include <cstdint>

namespace fkcd::kernels {

struct ConvGeometry {
  std::int64_t batch = 1;
  std::int64_t in_channels = 1;
  std::int64_t in_h = 1;
  std::int64_t in_w = 1;
  std::int64_t out_channels = 1;
  std::int64_t kernel = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;

  std::int64_t out_h() const { return (in_h + 2 * padding - kernel) / stride + 1; }
  std::int64_t out_w() const { return (in_w + 2 * padding - kernel) / stride + 1; }
};

// Dense convolution. weight: out_channels x in_channels x k x k.
template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                    T* output);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight,
                           T* grad_in);
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, const T* grad_out, const T* input,
                            T* grad_weight);

// Depthwise convolution. out_channels must equal in_channels; weight: C x 1 x k x k.
template <typename T>
void depthwise_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                       T* output);
template <typename T>
void depthwise_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight,
                              T* grad_in);
template <typename T>
void depthwise_backward_weight(const ConvGeometry& g, const T* grad_out, const T* input,
                               T* grad_weight);

// Sum of grad_out over batch and space, per output channel.
template <typename T>
void conv_backward_bias(std::int64_t batch, std::int64_t channels, std::int64_t plane,
                        const T* grad_out, T* grad_bias);

// c[b] = a[b] (m x k) * b[b] (k x n)
template <typename T>
void matmul_forward(std::int64_t batch, std::int64_t m, std::int64_t k, std::int64_t n,
                    const T* a, const T* b, T* c);
// grad_a = grad_c * b^T, grad_b = a^T * grad_c; either output may be null.
template <typename T>
void matmul_backward(std::int64_t batch, std::int64_t m, std::int64_t k, std::int64_t n,
                     const T* a, const T* b, const T* grad_c, T* grad_a, T* grad_b);

// Channel-major sigmoid attention. q: batch x d x tq, k and v: batch x d x tk.
// attn (batch x tq x tk) receives sigmoid(q^T k * scale); out = v attn^T.
template <typename T>
void sigmoid_attention_forward(std::int64_t batch, std::int64_t d, std::int64_t tq,
                               std::int64_t tk, T scale, const T* q, const T* k, const T* v,
                               T* attn, T* out);
template <typename T>
void sigmoid_attention_backward(std::int64_t batch, std::int64_t d, std::int64_t tq,
                                std::int64_t tk, T scale, const T* q, const T* k, const T* v,
                                const T* attn, const T* grad_out, T* grad_q, T* grad_k,
                                T* grad_v);

// Bilinear upsampling by an integer factor, half-pixel centers, edge clamped.
template <typename T>
void bilinear_upsample_forward(std::int64_t planes, std::int64_t h, std::int64_t w,
                               std::int64_t factor, const T* input, T* output);
template <typename T>
void bilinear_upsample_backward(std::int64_t planes, std::int64_t h, std::int64_t w,
                                std::int64_t factor, const T* grad_out, T* grad_in);

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                    T* output);
template <typename T>
void depthwise_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                       T* output);
template <typename T>
void matmul_forward(std::int64_t batch, std::int64_t m, std::int64_t k, std::int64_t n,
                    const T* a, const T* b, T* c);
template <typename T>
void sigmoid_attention_forward(std::int64_t batch, std::int64_t d, std::int64_t tq,
                               std::int64_t tk, T scale, const T* q, const T* k, const T* v,
                               T* attn, T* out);
template <typename T>
void bilinear_upsample_forward(std::int64_t planes, std::int64_t h, std::int64_t w,
                               std::int64_t factor, const T* input, T* output);

}  // namespace reference

// Number of OpenMP threads kernels may use; 1 when built without OpenMP.
int max_threads();
void set_num_threads(int n);

}  // namespace fkcd::kernels

#endif  // FKCD_KERNELS_HPP_
