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
#include "fkcd/ops.hpp"
#include "test_util.hpp"

namespace fkcd {
namespace {

TEST(Tensor, ElementCountMatchesShape) {
  Tensor<float> t({2, 3, 4}, std::vector<float>(24, 1.0f));
  EXPECT_EQ(t.numel(), 24);
  EXPECT_EQ(t.rank(), 3);
  EXPECT_THROW(Tensor<float>({2, 3}, std::vector<float>(5)), ShapeError);
}

TEST(Tensor, RejectsNonPositiveDims) {
  EXPECT_THROW(Tensor<double>::zeros({2, 0}), ShapeError);
  EXPECT_THROW(Tensor<double>::zeros({}), ShapeError);
}

TEST(Tensor, CopiesShareStorageClonesDoNot) {
  auto a = Tensor<double>::zeros({3});
  auto b = a;
  auto c = a.clone();
  a.mutable_data()[0] = 5.0;
  EXPECT_EQ(b.data()[0], 5.0);
  EXPECT_EQ(c.data()[0], 0.0);
}

TEST(Autograd, SumGivesOnes) {
  std::mt19937_64 rng(1);
  auto x = testing::random_tensor<double>({2, 3}, rng, -1, 1, true);
  GradientTape<double> tape;
  auto loss = sum(x);
  tape.backward(loss);
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Autograd, SquareGivesTwoX) {
  std::mt19937_64 rng(2);
  auto x = testing::random_tensor<double>({4}, rng, -1, 1, true);
  GradientTape<double> tape;
  auto loss = sum(mul(x, x));
  tape.backward(loss);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(x.grad()[i], 2 * x.data()[i]);
}

TEST(Autograd, NonScalarBackwardRejected) {
  auto x = Tensor<double>::full({2}, 1.0, true);
  GradientTape<double> tape;
  auto y = scale(x, 2.0);
  EXPECT_THROW(tape.backward(y), ShapeError);
}

TEST(Autograd, UntrackedTensorsNeverRecorded) {
  auto x = Tensor<double>::full({2}, 1.0, false);
  auto w = Tensor<double>::full({2}, 3.0, true);
  GradientTape<double> tape;
  auto untracked = scale(x, 2.0);
  EXPECT_EQ(tape.size(), 0u);
  auto loss = sum(mul(untracked, w));
  tape.backward(loss);
  EXPECT_FALSE(x.has_grad());
  EXPECT_FALSE(untracked.has_grad() && untracked.requires_grad());
  EXPECT_TRUE(w.has_grad());
}

TEST(Autograd, NoTapeNoTracking) {
  auto w = Tensor<double>::full({2}, 3.0, true);
  auto y = scale(w, 2.0);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Autograd, LeafGradHasValueShape) {
  std::mt19937_64 rng(3);
  auto x = testing::random_tensor<double>({1, 2, 3, 3}, rng, -1, 1, true);
  auto w = testing::random_tensor<double>({4, 2, 3, 3}, rng, -1, 1, true);
  GradientTape<double> tape;
  auto loss = sum(conv2d(x, w, Tensor<double>(), 1, 1));
  tape.backward(loss);
  EXPECT_EQ(x.grad().size(), static_cast<std::size_t>(x.numel()));
  EXPECT_EQ(w.grad().size(), static_cast<std::size_t>(w.numel()));
}

TEST(Autograd, TapeRecordsInTopologicalOrder) {
  auto x = Tensor<double>::full({2}, 1.0, true);
  GradientTape<double> tape;
  auto y = sum(sigmoid(scale(x, 2.0)));
  ASSERT_EQ(tape.size(), 3u);
  EXPECT_EQ(tape.op_name(0), "scale");
  EXPECT_EQ(tape.op_name(1), "sigmoid");
  EXPECT_EQ(tape.op_name(2), "sum");
}

TEST(Autograd, FirstNonFiniteNamesTheOp) {
  auto x = Tensor<double>({2}, {1.0, 0.0}, true);
  auto big = Tensor<double>({2}, {1e308, 1.0}, true);
  GradientTape<double> tape;
  auto y = mul(scale(big, 10.0), x);
  auto name = tape.first_non_finite();
  ASSERT_TRUE(name.has_value());
  EXPECT_NE(name->find("scale"), std::string::npos);
}

}  // namespace
}  // namespace fkcd
