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

#ifndef FKCD_MODEL_HPP_
#define FKCD_MODEL_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fkcd/decoder.hpp"
#include "fkcd/edm.hpp"
#include "fkcd/encoder.hpp"

namespace fkcd {

// Full bitemporal change detector: a shared encoder, one difference stage per
// encoder stage, and the fusion decoder. Eval-mode forward calls never mutate
// the weights and may run concurrently.
template <Real T>
class ChangeDetector {
 public:
  explicit ChangeDetector(const ModelConfig& config, std::uint64_t seed = 42);
  ChangeDetector(ChangeDetector&&) noexcept = default;
  ChangeDetector& operator=(ChangeDetector&&) noexcept = default;
  ChangeDetector(const ChangeDetector&) = delete;
  ChangeDetector& operator=(const ChangeDetector&) = delete;

  // t1, t2: N x 3 x H x W of equal shape, H and W divisible by input_divisor().
  ChangeMap<T> forward(const Tensor<T>& t1, const Tensor<T>& t2, Mode mode = Mode::kEval) const;
  DifferencePyramid<T> differences(const Tensor<T>& t1, const Tensor<T>& t2, Mode mode) const;

  const ModelConfig& config() const { return config_; }
  WeightStore<T>& weights() { return *store_; }
  const WeightStore<T>& weights() const { return *store_; }
  const Encoder<T>& encoder() const { return *encoder_; }
  const std::vector<EdmStage<T>>& edm() const { return edm_; }

 private:
  ModelConfig config_;
  std::unique_ptr<WeightStore<T>> store_;
  std::unique_ptr<Encoder<T>> encoder_;
  std::vector<EdmStage<T>> edm_;
  std::unique_ptr<Decoder<T>> decoder_;
};

extern template class ChangeDetector<float>;
extern template class ChangeDetector<double>;

// ---- parameter accounting ----

struct ModuleCount {
  std::string module;
  std::int64_t count = 0;
  bool operator==(const ModuleCount&) const = default;
};

struct ParamReport {
  std::vector<ModuleCount> modules;  // "encoder.stem", "edm.stage1", "decoder.head", ...
  std::int64_t total = 0;
};

// Closed-form parameter counts of the building blocks.
namespace param_formulas {
std::int64_t conv(std::int64_t in, std::int64_t out, std::int64_t kernel, bool bias);
std::int64_t depthwise(std::int64_t channels, std::int64_t kernel);
std::int64_t batch_norm(std::int64_t channels);
std::int64_t squeeze_excite(std::int64_t channels);
std::int64_t depthwise_separable(std::int64_t in, std::int64_t out);
std::int64_t channel_mixer(std::int64_t channels, std::int64_t hidden);
std::int64_t encoder_block(std::int64_t channels, bool with_se);
std::int64_t stage_transition(std::int64_t in);
std::int64_t edm_stage(std::int64_t in, std::int64_t c_d, std::int64_t d_k, bool use_mask);
std::int64_t projection(std::int64_t channels, bool full);
std::int64_t swsa(std::int64_t channels, bool full);
std::int64_t egsa(std::int64_t channels, std::int64_t patch, bool full);
std::int64_t refine(std::int64_t channels);
}  // namespace param_formulas

ParamReport count_params(const ModelConfig& config);

// Groups stored parameters (buffers excluded) by the first two path segments.
template <Real T>
ParamReport param_breakdown(const WeightStore<T>& store);

// ---- FLOP accounting ----
// 1 multiply-accumulate = 2 FLOPs. Conv: 2 k^2 Cin Cout H'W' (depthwise:
// 2 k^2 C H'W'); bias adds are folded into the conv. Squeeze-excite gate
// layers act on pooled 1x1 maps and are reported as dense FLOPs. Attention:
// 2 Tq Tk d for each of the two matmuls. Normalization, activations,
// arithmetic and upsampling: 1 FLOP per output element; reductions: 1 per
// input element; reshapes and window partitioning are free.

struct FlopReport {
  std::int64_t conv = 0;
  std::int64_t dense = 0;
  std::int64_t attention = 0;
  std::int64_t elementwise = 0;
  std::vector<ModuleCount> modules;

  std::int64_t total() const { return conv + dense + attention + elementwise; }
};

namespace flop_formulas {
std::int64_t conv(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t out_h,
                  std::int64_t out_w);
std::int64_t depthwise(std::int64_t channels, std::int64_t kernel, std::int64_t out_h,
                       std::int64_t out_w);
// Both matmuls of one attention head over tq queries and tk keys of width d.
std::int64_t attention(std::int64_t tq, std::int64_t tk, std::int64_t d);
}  // namespace flop_formulas

// Per-sample FLOPs for one image pair of size height x width.
FlopReport estimate_flops(const ModelConfig& config, std::int64_t height, std::int64_t width);

// ---- weight files ----
// Layout: "FKCD", u32 version, u64 header byte length, UTF-8 JSON header
// [{"name": ..., "shape": [...]}, ...], then float32 little-endian payloads in
// header order. All integers are little-endian.

inline constexpr std::uint32_t kWeightFormatVersion = 1;

// Buffers (BN running statistics) are stored alongside parameters.
template <Real T>
void save_weights(const WeightStore<T>& store, const std::string& path);

// Reads a file without a reference layout. Entries whose name ends in
// "running_mean" or "running_var" are tagged as buffers.
WeightStore<float> load_weights(const std::string& path);

// Loads into an existing store, checking names and shapes against it before
// any payload is read.
template <Real T>
void load_weights_into(WeightStore<T>& store, const std::string& path);

}  // namespace fkcd

#endif  // FKCD_MODEL_HPP_
