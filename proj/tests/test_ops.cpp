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

#include "fkcd/errors.hpp"
#include "fkcd/layers.hpp"
#include "fkcd/ops.hpp"
#include "test_util.hpp"

namespace fkcd {
namespace {

using testing::grad_check;
using testing::random_tensor;
using TD = Tensor<double>;

const TD kNoBias;

TEST(Conv2d, OnesKernelSumsField) {
  auto y = conv2d(TD::full({1, 1, 3, 3}, 1.0), TD::full({1, 1, 3, 3}, 1.0), kNoBias, 1, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(y.item(), 9.0);
}

TEST(Conv2d, IdentityKernel) {
  TD x({1, 1, 2, 2}, {1, 2, 3, 4});
  auto y = conv2d(x, TD::full({1, 1, 1, 1}, 1.0), kNoBias, 1, 0);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Conv2d, StridedPaddedMatchesLoopOracle) {
  std::mt19937_64 rng(5);
  auto x = random_tensor<double>({1, 3, 5, 5}, rng);
  auto w = random_tensor<double>({4, 3, 3, 3}, rng);
  auto y = conv2d(x, w, kNoBias, 2, 1);
  ASSERT_EQ(y.shape(), (Shape{1, 4, 3, 3}));
  auto oracle = testing::conv_oracle({x.data().begin(), x.data().end()}, 1, 3, 5, 5,
                                     {w.data().begin(), w.data().end()}, 4, 3, {}, 2, 1, false);
  for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(y.data()[i], oracle[i], 1e-6);
}

TEST(Conv2d, ChannelMismatchRejected) {
  EXPECT_THROW(conv2d(TD::zeros({1, 2, 3, 3}), TD::zeros({1, 3, 1, 1}), kNoBias, 1, 0), ShapeError);
  EXPECT_THROW(conv2d(TD::zeros({1, 1, 2, 2}), TD::zeros({1, 1, 3, 3}), kNoBias, 1, 0), ShapeError);
}

TEST(Depthwise, OnesKernelSumsEachChannel) {
  std::mt19937_64 rng(6);
  auto x = random_tensor<double>({1, 2, 3, 3}, rng);
  auto y = depthwise_conv2d(x, TD::full({2, 1, 3, 3}, 1.0), kNoBias, 1, 0);
  for (int c = 0; c < 2; ++c) {
    double s = 0;
    for (int i = 0; i < 9; ++i) s += x.data()[c * 9 + i];
    EXPECT_NEAR(y.data()[c], s, 1e-12);
  }
}

TEST(Depthwise, ChannelsAreSeparable) {
  std::mt19937_64 rng(7);
  auto x = random_tensor<double>({1, 2, 4, 4}, rng);
  auto w = random_tensor<double>({2, 1, 3, 3}, rng);
  auto y1 = depthwise_conv2d(x, w, kNoBias, 1, 1);
  auto x2 = x.clone();
  for (int i = 0; i < 16; ++i) x2.mutable_data()[i] += 0.5;  // channel 0 only
  auto y2 = depthwise_conv2d(x2, w, kNoBias, 1, 1);
  for (int i = 16; i < 32; ++i) EXPECT_EQ(y1.data()[i], y2.data()[i]);
}

TEST(Depthwise, ChannelMismatchRejected) {
  EXPECT_THROW(depthwise_conv2d(TD::zeros({1, 3, 4, 4}), TD::zeros({2, 1, 3, 3}), kNoBias, 1, 1),
               ShapeError);
}

TEST(BatchNorm, TrainModeStandardizes) {
  std::mt19937_64 rng(8);
  auto x = random_tensor<double>({3, 2, 4, 4}, rng, -3, 5);
  auto state = BatchNormState<double>::create(2);
  auto y = batch_norm2d(x, TD::full({2}, 1.0), TD::zeros({2}), state, Mode::kTrain);
  for (int c = 0; c < 2; ++c) {
    double s = 0, ss = 0;
    int n = 0;
    for (int b = 0; b < 3; ++b)
      for (int i = 0; i < 16; ++i) {
        const double v = y.data()[(b * 2 + c) * 16 + i];
        s += v;
        ss += v * v;
        ++n;
      }
    EXPECT_LE(std::abs(s / n), 1e-5);
    EXPECT_NEAR(ss / n, 1.0, 1e-3);
  }
}

TEST(BatchNorm, ZeroGammaGivesBeta) {
  std::mt19937_64 rng(9);
  auto x = random_tensor<double>({2, 2, 3, 3}, rng);
  auto state = BatchNormState<double>::create(2);
  auto y = batch_norm2d(x, TD::zeros({2}), TD({2}, {0.25, -1.5}), state, Mode::kTrain);
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(y.data()[(b * 2 + c) * 9 + i], c ? -1.5 : 0.25);
}

TEST(BatchNorm, EvalModeHandComputed) {
  TD x({1, 1, 2, 2}, {1, 2, 3, 4});
  auto state = BatchNormState<double>::create(1);
  state.running_mean.mutable_data()[0] = 2.0;
  state.running_var.mutable_data()[0] = 4.0;
  auto y = batch_norm2d(x, TD({1}, {3.0}), TD({1}, {0.5}), state, Mode::kEval);
  for (int i = 0; i < 4; ++i) {
    const double expected = (i + 1 - 2.0) / std::sqrt(4.0 + 1e-5) * 3.0 + 0.5;
    EXPECT_NEAR(y.data()[i], expected, 1e-6);
  }
}

TEST(BatchNorm, TrainUpdatesRunningStats) {
  TD x({2, 1, 1, 2}, {1, 3, 5, 7});
  auto state = BatchNormState<double>::create(1);
  batch_norm2d(x, TD::full({1}, 1.0), TD::zeros({1}), state, Mode::kTrain);
  EXPECT_NEAR(state.running_mean.data()[0], 0.1 * 4.0, 1e-12);
  // unbiased variance of {1,3,5,7} is 20/3
  EXPECT_NEAR(state.running_var.data()[0], 0.9 + 0.1 * 20.0 / 3.0, 1e-12);
}

TEST(BatchNorm, SingleValueBatchGivesBeta) {
  auto state = BatchNormState<double>::create(1);
  auto y = batch_norm2d(TD::full({1, 1, 1, 1}, 3.0), TD::full({1}, 1.0), TD({1}, {0.5}), state,
                        Mode::kTrain);
  EXPECT_DOUBLE_EQ(y.item(), 0.5);
  EXPECT_TRUE(std::isfinite(state.running_var.data()[0]));
}

TEST(SqueezeExcite, ZeroGateLogitsHalveInput) {
  std::mt19937_64 rng(10);
  WeightStore<double> store;
  ParamBuilder<double> pb(store, 1);
  auto se = SqueezeExcite<double>::make(pb, 8);
  std::fill(se.expand.weight.mutable_data().begin(), se.expand.weight.mutable_data().end(), 0.0);
  std::fill(se.expand.bias.mutable_data().begin(), se.expand.bias.mutable_data().end(), 0.0);
  auto x = random_tensor<double>({2, 8, 3, 3}, rng);
  auto y = se(x);
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(y.data()[i], 0.5 * x.data()[i]);
}

TEST(SqueezeExcite, ConstantInputHandComputedGate) {
  WeightStore<double> store;
  ParamBuilder<double> pb(store, 2);
  auto se = SqueezeExcite<double>::make(pb, 4);  // one hidden unit
  auto& w1 = se.reduce.weight;
  auto& w2 = se.expand.weight;
  const std::vector<double> vals{0.5, -0.25, 1.0, 0.75};
  auto x = TD::zeros({1, 4, 2, 2});
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 4; ++i) x.mutable_data()[c * 4 + i] = vals[c];
  auto y = se(x);
  double hidden = se.reduce.bias.data()[0];
  for (int c = 0; c < 4; ++c) hidden += w1.data()[c] * vals[c];
  hidden = std::max(0.0, hidden);
  const int c = 2;
  const double gate = 1.0 / (1.0 + std::exp(-(w2.data()[c] * hidden + se.expand.bias.data()[c])));
  EXPECT_NEAR(y.data()[c * 4], vals[c] * gate, 1e-12);
}

TEST(SqueezeExcite, PreservesShapeAndRejectsMismatch) {
  std::mt19937_64 rng(11);
  WeightStore<double> store;
  ParamBuilder<double> pb(store, 3);
  auto se = SqueezeExcite<double>::make(pb, 8);
  auto x = random_tensor<double>({2, 8, 5, 3}, rng);
  EXPECT_EQ(se(x).shape(), x.shape());
  EXPECT_THROW(se(random_tensor<double>({1, 4, 2, 2}, rng)), ShapeError);
}

TEST(Elementwise, SigmoidBasics) {
  EXPECT_DOUBLE_EQ(sigmoid(TD::scalar(0.0)).item(), 0.5);
  std::mt19937_64 rng(12);
  auto x = random_tensor<double>({100}, rng, -30, 30);
  auto p = sigmoid(x), q = sigmoid(neg(x));
  for (int i = 0; i < 100; ++i) {
    EXPECT_GT(p.data()[i], 0.0);
    EXPECT_LT(p.data()[i], 1.0);
    EXPECT_NEAR(q.data()[i], 1.0 - p.data()[i], 1e-12);
  }
}

TEST(Elementwise, AbsOfSelfDifferenceIsZero) {
  std::mt19937_64 rng(13);
  auto a = random_tensor<double>({2, 3, 4, 4}, rng);
  const auto d = abs(sub(a, a));
  for (double v : d.data()) EXPECT_EQ(v, 0.0);
}

TEST(Elementwise, MaskBroadcastMatchesLoop) {
  std::mt19937_64 rng(14);
  auto mask = random_tensor<double>({1, 1, 3, 4}, rng);
  auto value = random_tensor<double>({1, 5, 3, 4}, rng);
  auto y = mul(mask, value);
  auto y2 = mul(value, mask);
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < 12; ++i) {
      EXPECT_DOUBLE_EQ(y.data()[c * 12 + i], mask.data()[i] * value.data()[c * 12 + i]);
      EXPECT_DOUBLE_EQ(y2.data()[c * 12 + i], y.data()[c * 12 + i]);
    }
}

TEST(Elementwise, NonBroadcastableRejected) {
  EXPECT_THROW(add(TD::zeros({1, 2, 3, 3}), TD::zeros({1, 3, 3, 3})), ShapeError);
}

TEST(Matmul, IdentityAndHandCase) {
  TD a({2, 2}, {1, 2, 3, 4}), b({2, 2}, {5, 6, 7, 8}), eye({2, 2}, {1, 0, 0, 1});
  auto c = matmul(a, b);
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()), (std::vector<double>{19, 22, 43, 50}));
  auto i = matmul(eye, a);
  EXPECT_EQ(std::vector<double>(i.data().begin(), i.data().end()), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_THROW(matmul(TD::zeros({2, 3}), TD::zeros({2, 3})), ShapeError);
}

TEST(Matmul, RandomMatchesLoop) {
  std::mt19937_64 rng(15);
  auto a = random_tensor<double>({2, 3, 4}, rng), b = random_tensor<double>({2, 4, 5}, rng);
  auto c = matmul(a, b);
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 5; ++j) {
        double s = 0;
        for (int k = 0; k < 4; ++k) s += a.data()[n * 12 + i * 4 + k] * b.data()[n * 20 + k * 5 + j];
        EXPECT_NEAR(c.data()[n * 15 + i * 5 + j], s, 1e-6);
      }
}

TEST(Bilinear, FactorOneIdentityAndConstant) {
  std::mt19937_64 rng(16);
  auto x = random_tensor<double>({1, 2, 3, 3}, rng);
  auto y = bilinear_upsample(x, 1);
  EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
  const auto c = bilinear_upsample(TD::full({1, 1, 2, 3}, 2.5), 4);
  for (double v : c.data()) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(Bilinear, HandEvaluatedTwoByTwo) {
  TD x({1, 1, 2, 2}, {0, 1, 2, 3});
  auto y = bilinear_upsample(x, 2);
  auto sample = [&](double sy, double sx) {
    sy = std::clamp(sy, 0.0, 1.0);
    sx = std::clamp(sx, 0.0, 1.0);
    const double top = (1 - sx) * 0 + sx * 1, bottom = (1 - sx) * 2 + sx * 3;
    return (1 - sy) * top + sy * bottom;
  };
  for (int oy = 0; oy < 4; ++oy)
    for (int ox = 0; ox < 4; ++ox) {
      EXPECT_NEAR(y.data()[oy * 4 + ox], sample((oy + 0.5) / 2 - 0.5, (ox + 0.5) / 2 - 0.5), 1e-12)
          << oy << "," << ox;
    }
  // Known values: corners clamp, interior quarter points.
  EXPECT_DOUBLE_EQ(y.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(y.data()[5], 0.75);
  EXPECT_DOUBLE_EQ(y.data()[15], 3.0);
}

TEST(Bce, BalancedZeroLogitsGiveLn2) {
  TD logits = TD::zeros({1, 1, 2, 2});
  TD targets({1, 1, 2, 2}, {0, 1, 1, 0});
  EXPECT_NEAR(bce_with_logits(logits, targets).item(), std::log(2.0), 1e-15);
}

TEST(Bce, GradientIsSigmoidMinusTarget) {
  std::mt19937_64 rng(17);
  auto z = random_tensor<double>({1, 1, 3, 3}, rng, -4, 4, true);
  TD y({1, 1, 3, 3}, {0, 1, 1, 0, 0, 1, 0, 1, 1});
  GradientTape<double> tape;
  auto loss = bce_with_logits(z, y);
  tape.backward(loss);
  for (int i = 0; i < 9; ++i) {
    const double expected = (1.0 / (1.0 + std::exp(-z.data()[i])) - y.data()[i]) / 9.0;
    EXPECT_NEAR(z.grad()[i], expected, 1e-10);
  }
}

TEST(Windows, PartitionMergeRoundTrip) {
  std::mt19937_64 rng(18);
  auto x = random_tensor<double>({2, 3, 8, 8}, rng);
  for (auto [w, s] : {std::pair{4, 4}, {8, 4}, {6, 2}, {8, 8}}) {
    auto windows = window_partition(x, w, s);
    EXPECT_EQ(windows.shape(), (Shape{2 * (8 / s) * (8 / s), 3, w * w}));
    auto back = window_merge_center(windows, 2, 8, 8, w, s);
    EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), back.data().begin()));
  }
}

TEST(Windows, GeometryChecked) {
  EXPECT_THROW(check_window_geometry(8, 8, 5, 2), ShapeError);  // odd margin
  EXPECT_THROW(check_window_geometry(10, 8, 4, 4), ShapeError);
  EXPECT_NO_THROW(check_window_geometry(16, 16, 8, 4));
}

// ---- gradient checks, one per primitive ----

constexpr double kTol = 1e-5;

class GradCheck : public ::testing::Test {
 protected:
  std::mt19937_64 rng{1234};
  void expect_ok(const testing::GradCheckResult& r) {
    EXPECT_GE(r.directions, 10);
    EXPECT_LE(r.worst_relative_error, kTol);
  }
};

TEST_F(GradCheck, Conv2d) {
  expect_ok(grad_check([](const std::vector<TD>& v) { return conv2d(v[0], v[1], v[2], 2, 1); },
                       {random_tensor<double>({2, 3, 5, 5}, rng), random_tensor<double>({4, 3, 3, 3}, rng),
                        random_tensor<double>({4}, rng)},
                       rng));
}

TEST_F(GradCheck, Depthwise) {
  expect_ok(grad_check([](const std::vector<TD>& v) { return depthwise_conv2d(v[0], v[1], v[2], 1, 1); },
                       {random_tensor<double>({2, 3, 5, 4}, rng), random_tensor<double>({3, 1, 3, 3}, rng),
                        random_tensor<double>({3}, rng)},
                       rng));
}

TEST_F(GradCheck, BatchNormTrain) {
  expect_ok(grad_check(
      [](const std::vector<TD>& v) {
        auto state = BatchNormState<double>::create(3);
        return batch_norm2d(v[0], v[1], v[2], state, Mode::kTrain);
      },
      {random_tensor<double>({2, 3, 3, 3}, rng), random_tensor<double>({3}, rng, 0.5, 1.5),
       random_tensor<double>({3}, rng)},
      rng));
}

TEST_F(GradCheck, BatchNormEval) {
  expect_ok(grad_check(
      [](const std::vector<TD>& v) {
        auto state = BatchNormState<double>::create(3);
        state.running_var.mutable_data()[1] = 2.0;
        return batch_norm2d(v[0], v[1], v[2], state, Mode::kEval);
      },
      {random_tensor<double>({2, 3, 3, 3}, rng), random_tensor<double>({3}, rng, 0.5, 1.5),
       random_tensor<double>({3}, rng)},
      rng));
}

TEST_F(GradCheck, BroadcastBinaryOps) {
  auto a = random_tensor<double>({2, 3, 4, 4}, rng), b = random_tensor<double>({1, 3, 1, 4}, rng);
  expect_ok(grad_check([](const std::vector<TD>& v) { return add(v[0], v[1]); }, {a, b}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return sub(v[1], v[0]); }, {a, b}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return mul(v[0], v[1]); }, {a, b}, rng));
}

TEST_F(GradCheck, UnaryOps) {
  auto x = random_tensor<double>({2, 3, 4, 4}, rng, -2, 2);
  expect_ok(grad_check([](const std::vector<TD>& v) { return neg(v[0]); }, {x}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return abs(v[0]); }, {x}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return sigmoid(v[0]); }, {x}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return relu(v[0]); }, {x}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return gelu(v[0]); }, {x}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return scale(v[0], -0.7); }, {x}, rng));
}

TEST_F(GradCheck, Matmul) {
  expect_ok(grad_check([](const std::vector<TD>& v) { return matmul(v[0], v[1]); },
                       {random_tensor<double>({2, 3, 4}, rng), random_tensor<double>({2, 4, 5}, rng)}, rng));
}

TEST_F(GradCheck, Bilinear) {
  expect_ok(grad_check([](const std::vector<TD>& v) { return bilinear_upsample(v[0], 4); },
                       {random_tensor<double>({1, 2, 3, 5}, rng)}, rng));
}

TEST_F(GradCheck, Reductions) {
  auto x = random_tensor<double>({2, 3, 4, 4}, rng);
  expect_ok(grad_check([](const std::vector<TD>& v) { return global_avg_pool(v[0]); }, {x}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return channel_sum(v[0]); }, {x}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return sum(v[0]); }, {x}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return mean(v[0]); }, {x}, rng));
  expect_ok(grad_check([](const std::vector<TD>& v) { return reshape(v[0], {2, 3, 16}); }, {x}, rng));
}

TEST_F(GradCheck, WindowOps) {
  auto x = random_tensor<double>({1, 2, 8, 8}, rng);
  expect_ok(grad_check([](const std::vector<TD>& v) { return window_partition(v[0], 8, 4); }, {x}, rng));
  auto w = random_tensor<double>({4, 2, 64}, rng);
  expect_ok(grad_check([](const std::vector<TD>& v) { return window_merge_center(v[0], 1, 8, 8, 8, 4); },
                       {w}, rng));
}

TEST_F(GradCheck, SigmoidAttention) {
  expect_ok(grad_check([](const std::vector<TD>& v) { return sigmoid_attention_core(v[0], v[1], v[2]); },
                       {random_tensor<double>({2, 3, 5}, rng), random_tensor<double>({2, 3, 4}, rng),
                        random_tensor<double>({2, 3, 4}, rng)},
                       rng));
}

TEST_F(GradCheck, BceWithLogits) {
  TD y({1, 1, 2, 3}, {0, 1, 1, 0, 1, 0});
  expect_ok(grad_check([y](const std::vector<TD>& v) { return bce_with_logits(v[0], y); },
                       {random_tensor<double>({1, 1, 2, 3}, rng, -3, 3)}, rng));
}

TEST_F(GradCheck, SqueezeExcite) {
  WeightStore<double> store;
  ParamBuilder<double> pb(store, 5);
  auto se = SqueezeExcite<double>::make(pb, 8);
  expect_ok(grad_check(
      [](const std::vector<TD>& v) {
        Conv<double> r{v[1], v[2], 1, 0}, e{v[3], v[4], 1, 0};
        return se_block(v[0], r, e);
      },
      {random_tensor<double>({2, 8, 3, 3}, rng), se.reduce.weight, se.reduce.bias, se.expand.weight,
       se.expand.bias},
      rng));
}

}  // namespace
}  // namespace fkcd
