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

#ifndef FKCD_CONFIG_HPP_
#define FKCD_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace fkcd {

// Sliding-window attention geometry: w x w windows placed at stride s. The
// central s x s part of each window is kept, so (w - s) must be even.
struct WindowSpec {
  std::int64_t window = 8;
  std::int64_t stride = 8;

  void validate() const;
  // Throws ConfigError unless the spec tiles an height x width feature map.
  void validate_for(std::int64_t height, std::int64_t width) const;
  bool operator==(const WindowSpec&) const = default;
};

struct EncoderConfig {
  std::int64_t input_channels = 3;
  std::int64_t stem_channels = 16;
  std::vector<std::int64_t> stage_depths{1, 1, 2};

  std::int64_t stage_channels(int stage) const { return stem_channels << stage; }
};

struct DecoderConfig {
  // Ordered deepest level first: [level3, level2, level1] for three stages.
  std::vector<WindowSpec> window_specs{{4, 4}, {4, 4}, {8, 8}};
  double threshold = 0.5;
};

struct ModelConfig {
  EncoderConfig encoder;
  std::int64_t c_d = 16;
  std::int64_t d_k = 0;  // 0 selects c_d
  DecoderConfig decoder;
  bool use_edm = true;
  bool use_swsa = true;
  bool use_egsa = true;
  bool use_four_stages = false;
  bool full_projections = false;

  int num_stages() const { return use_four_stages ? 4 : 3; }
  std::int64_t key_dim() const { return d_k > 0 ? d_k : c_d; }
  // Input H and W must be multiples of this.
  std::int64_t input_divisor() const { return std::int64_t{1} << (num_stages() + 1); }
  // Window spec for level (1 = shallowest).
  const WindowSpec& spec_for_level(int level) const {
    return decoder.window_specs[static_cast<std::size_t>(num_stages() - level)];
  }

  // Structural checks that do not depend on the input size.
  void validate() const;
  // Full check against an input resolution.
  void validate_for_input(std::int64_t height, std::int64_t width) const;
};

// Toy configuration used for CPU-scale training and tests.
ModelConfig toy_config();
// Window specs reported for the four benchmark datasets ("sysu", "cdd", "whu",
// "levir+"), on top of the toy widths.
ModelConfig dataset_config(const std::string& dataset);

void to_json(nlohmann::json& j, const WindowSpec& s);
void from_json(const nlohmann::json& j, WindowSpec& s);
void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const DecoderConfig& c);
void from_json(const nlohmann::json& j, DecoderConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

ModelConfig load_config(const std::string& path);

}  // namespace fkcd

#endif  // FKCD_CONFIG_HPP_
