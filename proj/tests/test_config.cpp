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

#include <gtest/gtest.h>

#include "fkcd/config.hpp"
#include "fkcd/errors.hpp"
#include "fkcd/layers.hpp"
#include "fkcd/model.hpp"

namespace fkcd {
namespace {

TEST(WindowSpec, Validation) {
  EXPECT_NO_THROW((WindowSpec{16, 8}.validate()));
  EXPECT_NO_THROW((WindowSpec{4, 4}.validate()));
  EXPECT_THROW((WindowSpec{4, 8}.validate()), ConfigError);   // w < s
  EXPECT_THROW((WindowSpec{7, 4}.validate()), ConfigError);   // odd margin
  EXPECT_THROW((WindowSpec{4, 0}.validate()), ConfigError);
  EXPECT_NO_THROW((WindowSpec{16, 8}.validate_for(64, 64)));
  EXPECT_THROW((WindowSpec{16, 7}.validate_for(64, 64)), ConfigError);
  EXPECT_THROW((WindowSpec{8, 8}.validate_for(12, 16)), ConfigError);
}

TEST(ModelConfig, DefaultsAreTheFullModel) {
  const auto c = toy_config();
  EXPECT_TRUE(c.use_edm && c.use_swsa && c.use_egsa);
  EXPECT_FALSE(c.use_four_stages || c.full_projections);
  EXPECT_EQ(c.num_stages(), 3);
  EXPECT_EQ(c.key_dim(), c.c_d);
  EXPECT_EQ(c.input_divisor(), 16);
  EXPECT_NO_THROW(c.validate());
}

TEST(ModelConfig, StageChannelLaw) {
  EncoderConfig e;
  e.stem_channels = 8;
  EXPECT_EQ(e.stage_channels(0), 8);
  EXPECT_EQ(e.stage_channels(1), 16);
  EXPECT_EQ(e.stage_channels(2), 32);
}

TEST(ModelConfig, DatasetPresets) {
  const auto sysu = dataset_config("sysu");
  EXPECT_EQ(sysu.decoder.window_specs, (std::vector<WindowSpec>{{8, 4}, {8, 4}, {16, 8}}));
  const auto whu = dataset_config("whu");
  EXPECT_EQ(whu.decoder.window_specs, (std::vector<WindowSpec>{{4, 4}, {4, 4}, {8, 8}}));
  const auto levir = dataset_config("levir+");
  EXPECT_EQ(levir.decoder.window_specs, (std::vector<WindowSpec>{{4, 4}, {8, 8}, {8, 8}}));
  EXPECT_EQ(sysu.spec_for_level(1), (WindowSpec{16, 8}));
  EXPECT_EQ(sysu.spec_for_level(3), (WindowSpec{8, 4}));
  EXPECT_THROW(dataset_config("nope"), ConfigError);
  for (const auto& c : {sysu, whu, levir}) EXPECT_NO_THROW(c.validate_for_input(256, 256));
}

TEST(ModelConfig, InvalidConfigsRejected) {
  auto c = toy_config();
  c.decoder.threshold = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = toy_config();
  c.decoder.window_specs.pop_back();
  EXPECT_THROW(c.validate(), ConfigError);
  c = toy_config();
  c.c_d = 6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = toy_config();
  c.encoder.stage_depths = {1, 1};
  EXPECT_THROW(c.validate(), ConfigError);
  c = toy_config();
  EXPECT_THROW(c.validate_for_input(250, 250), ConfigError);
  EXPECT_THROW(c.validate_for_input(48, 64), ConfigError);  // level-1 window 8 on 12x16
}

TEST(ModelConfig, JsonRoundTrip) {
  auto c = dataset_config("sysu");
  c.full_projections = true;
  c.d_k = 8;
  nlohmann::json j = c;
  EXPECT_TRUE(j["decoder"]["window_specs"].is_array());
  EXPECT_EQ(j["decoder"]["window_specs"][2], nlohmann::json::array({16, 8}));
  const auto back = j.get<ModelConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(ModelConfig, JsonFieldErrors) {
  EXPECT_THROW(nlohmann::json::array().get<ModelConfig>(), ConfigError);
  nlohmann::json j = toy_config();
  j["decoder"]["window_specs"][0] = nlohmann::json::array({4});
  EXPECT_THROW(j.get<ModelConfig>(), ConfigError);
}

TEST(ParamFormulas, SpecConstants) {
  EXPECT_EQ(param_formulas::depthwise_separable(8, 8), 152);
  EXPECT_EQ(param_formulas::encoder_block(8, false), 240);
  EXPECT_EQ(param_formulas::refine(16), 464);
  EXPECT_EQ(param_formulas::squeeze_excite(32), 32 * 8 + 8 + 8 * 32 + 32);
  EXPECT_EQ(param_formulas::squeeze_excite(32), 552);
  EXPECT_EQ(param_formulas::conv(32, 16, 1, true), 528);
}

TEST(ParamFormulas, DegenerateZero) {
  WeightStore<float> store;
  EXPECT_EQ(store.parameter_count(), 0);
  EXPECT_EQ(param_breakdown(store).total, 0);
  EXPECT_EQ(param_formulas::conv(0, 0, 3, true), 0);
}

TEST(WeightStore, NamesAreUniqueAndBuffersExcluded) {
  WeightStore<float> store;
  ParamBuilder<float> pb(store, 1);
  auto bn = BatchNorm<float>::make(pb.scoped("bn"), 4);
  EXPECT_EQ(store.entries().size(), 4u);
  EXPECT_EQ(store.parameter_count(), 8);
  EXPECT_EQ(store.parameters().size(), 2u);
  EXPECT_NE(store.find("bn.running_mean"), nullptr);
  EXPECT_THROW(BatchNorm<float>::make(pb.scoped("bn"), 4), std::logic_error);
}

TEST(ParamBuilder, InitIsSeededAndBounded) {
  WeightStore<double> a, b;
  ParamBuilder<double> pa(a, 7), pb(b, 7);
  auto wa = pa.weight("w", {64, 9}, 9, 1.0);
  auto wb = pb.weight("w", {64, 9}, 9, 1.0);
  EXPECT_TRUE(std::equal(wa.data().begin(), wa.data().end(), wb.data().begin()));
  const double bound = std::sqrt(3.0 / 9.0);
  for (double v : wa.data()) EXPECT_LE(std::abs(v), bound);
  EXPECT_TRUE(wa.requires_grad());
}

}  // namespace
}  // namespace fkcd
