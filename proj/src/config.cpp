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

#include "fkcd/config.hpp"

#include <fstream>

#include "fkcd/errors.hpp"

namespace fkcd {

using nlohmann::json;

void WindowSpec::validate() const {
  if (stride < 1) throw ConfigError("window stride must be >= 1, got " + std::to_string(stride));
  if (window < stride) {
    throw ConfigError("window size " + std::to_string(window) + " is smaller than stride " +
                      std::to_string(stride));
  }
  if ((window - stride) % 2 != 0) {
    throw ConfigError("window size minus stride must be even, got w=" + std::to_string(window) +
                      " s=" + std::to_string(stride));
  }
}

void WindowSpec::validate_for(std::int64_t height, std::int64_t width) const {
  validate();
  if (height % stride != 0 || width % stride != 0) {
    throw ConfigError("feature map " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by window stride " + std::to_string(stride) +
                      " (w=" + std::to_string(window) + ")");
  }
}

void ModelConfig::validate() const {
  const auto stages = static_cast<std::size_t>(num_stages());
  if (encoder.input_channels < 1) throw ConfigError("input_channels must be positive");
  if (encoder.stem_channels < 1) throw ConfigError("stem_channels must be positive");
  if (encoder.stage_depths.size() != stages) {
    throw ConfigError("stage_depths needs " + std::to_string(stages) + " entries, got " +
                      std::to_string(encoder.stage_depths.size()));
  }
  for (auto d : encoder.stage_depths) {
    if (d < 1) throw ConfigError("every stage needs at least one block");
  }
  for (std::size_t s = 0; s < stages; ++s) {
    if (encoder.stage_channels(static_cast<int>(s)) % 4 != 0) {
      throw ConfigError("stage channel counts must be divisible by 4 for squeeze-excite");
    }
  }
  if (c_d < 1 || c_d % 4 != 0) throw ConfigError("c_d must be a positive multiple of 4");
  if (d_k < 0) throw ConfigError("d_k must be non-negative (0 selects c_d)");
  if (decoder.window_specs.size() != stages) {
    throw ConfigError("window_specs needs " + std::to_string(stages) +
                      " [w, s] pairs ordered deepest level first, got " +
                      std::to_string(decoder.window_specs.size()));
  }
  for (const auto& s : decoder.window_specs) s.validate();
  if (!(decoder.threshold > 0.0 && decoder.threshold < 1.0)) {
    throw ConfigError("threshold must lie in (0, 1)");
  }
}

void ModelConfig::validate_for_input(std::int64_t height, std::int64_t width) const {
  validate();
  const auto div = input_divisor();
  if (height % div != 0 || width % div != 0) {
    throw ConfigError("input " + std::to_string(height) + "x" + std::to_string(width) +
                      " must have height and width divisible by " + std::to_string(div));
  }
  for (int level = 1; level <= num_stages(); ++level) {
    const std::int64_t f = std::int64_t{1} << (level + 1);
    spec_for_level(level).validate_for(height / f, width / f);
  }
}

ModelConfig toy_config() { return ModelConfig{}; }

ModelConfig dataset_config(const std::string& dataset) {
  ModelConfig c = toy_config();
  if (dataset == "sysu" || dataset == "cdd") {
    c.decoder.window_specs = {{8, 4}, {8, 4}, {16, 8}};
  } else if (dataset == "whu") {
    c.decoder.window_specs = {{4, 4}, {4, 4}, {8, 8}};
  } else if (dataset == "levir+") {
    c.decoder.window_specs = {{4, 4}, {8, 8}, {8, 8}};
  } else if (dataset != "toy") {
    throw ConfigError("unknown dataset preset '" + dataset + "'");
  }
  return c;
}

void to_json(json& j, const WindowSpec& s) { j = json::array({s.window, s.stride}); }

void from_json(const json& j, WindowSpec& s) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("window spec must be a [w, s] pair");
  s.window = j.at(0).get<std::int64_t>();
  s.stride = j.at(1).get<std::int64_t>();
}

void to_json(json& j, const EncoderConfig& c) {
  j = json{{"input_channels", c.input_channels},
           {"stem_channels", c.stem_channels},
           {"stage_depths", c.stage_depths}};
}

void from_json(const json& j, EncoderConfig& c) {
  c.input_channels = j.value("input_channels", c.input_channels);
  c.stem_channels = j.value("stem_channels", c.stem_channels);
  if (j.contains("stage_depths")) c.stage_depths = j.at("stage_depths").get<std::vector<std::int64_t>>();
}

void to_json(json& j, const DecoderConfig& c) {
  j = json{{"window_specs", c.window_specs}, {"threshold", c.threshold}};
}

void from_json(const json& j, DecoderConfig& c) {
  if (j.contains("window_specs")) c.window_specs = j.at("window_specs").get<std::vector<WindowSpec>>();
  c.threshold = j.value("threshold", c.threshold);
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"encoder", c.encoder},
           {"c_d", c.c_d},
           {"d_k", c.key_dim()},
           {"decoder", c.decoder},
           {"use_edm", c.use_edm},
           {"use_swsa", c.use_swsa},
           {"use_egsa", c.use_egsa},
           {"use_four_stages", c.use_four_stages},
           {"full_projections", c.full_projections}};
}

void from_json(const json& j, ModelConfig& c) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  if (j.contains("encoder")) c.encoder = j.at("encoder").get<EncoderConfig>();
  c.c_d = j.value("c_d", c.c_d);
  c.d_k = j.value("d_k", c.d_k);
  if (j.contains("decoder")) c.decoder = j.at("decoder").get<DecoderConfig>();
  c.use_edm = j.value("use_edm", c.use_edm);
  c.use_swsa = j.value("use_swsa", c.use_swsa);
  c.use_egsa = j.value("use_egsa", c.use_egsa);
  c.use_four_stages = j.value("use_four_stages", c.use_four_stages);
  c.full_projections = j.value("full_projections", c.full_projections);
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  try {
    ModelConfig c = json::parse(in).get<ModelConfig>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError("invalid config " + path + ": " + e.what());
  }
}

}  // namespace fkcd
