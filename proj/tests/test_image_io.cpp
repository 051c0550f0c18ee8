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
#include "fkcd/image_io.hpp"
#include "fkcd/io_util.hpp"
#include "test_util.hpp"

namespace fkcd {
namespace {

Image gradient(std::int64_t h, std::int64_t w, std::int64_t channels) {
  Image img{h, w, channels, {}};
  for (std::int64_t i = 0; i < h * w * channels; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 7));
  return img;
}

TEST(ImageIo, GrayAndColorRoundTrip) {
  testing::TempDir dir;
  for (std::int64_t c : {1, 3}) {
    const auto img = gradient(5, 7, c);
    const auto path = dir.file(c == 1 ? "g.pgm" : "c.ppm");
    write_image(path, img);
    EXPECT_EQ(read_image(path), img);
  }
}

TEST(ImageIo, HeaderCommentsAccepted) {
  testing::TempDir dir;
  write_file_atomic(dir.file("a.pgm"), std::string("P5\n# made by hand\n2 1\n# more\n255\n") + "\x10\x20");
  const auto img = read_image(dir.file("a.pgm"));
  EXPECT_EQ(img.width, 2);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0x10, 0x20}));
}

TEST(ImageIo, MalformedFilesRejected) {
  testing::TempDir dir;
  write_file_atomic(dir.file("t.pgm"), std::string("P5\n4 4\n255\n") + "abc");
  EXPECT_THROW(read_image(dir.file("t.pgm")), FormatError);
  write_file_atomic(dir.file("m.pgm"), std::string("P5\n1 1\n65535\n") + "ab");
  EXPECT_THROW(read_image(dir.file("m.pgm")), FormatError);
  write_file_atomic(dir.file("p.pgm"), "P2\n1 1\n255\n0\n");
  EXPECT_THROW(read_image(dir.file("p.pgm")), FormatError);
  EXPECT_THROW(read_image(dir.file("absent.pgm")), std::exception);
}

TEST(ImageIo, MaskNonzeroIsOneAndWritesFullScale) {
  testing::TempDir dir;
  write_image(dir.file("m.pgm"), Image{1, 4, 1, {0, 1, 128, 255}});
  const auto m = read_mask(dir.file("m.pgm"));
  EXPECT_EQ(m.pixels, (std::vector<std::uint8_t>{0, 1, 1, 1}));
  write_mask(dir.file("w.pgm"), m);
  EXPECT_EQ(read_image(dir.file("w.pgm")).pixels, (std::vector<std::uint8_t>{0, 255, 255, 255}));
  Mask bad(1, 1);
  bad.pixels[0] = 3;
  EXPECT_THROW(check_binary(bad), ShapeError);
}

TEST(ImageIo, TensorConversions) {
  const Image gray{1, 2, 1, {0, 255}};
  const auto t = image_to_tensor<double>(gray);
  EXPECT_EQ(t.shape(), (Shape{1, 3, 1, 2}));
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(t.data()[c * 2], 0.0);
    EXPECT_EQ(t.data()[c * 2 + 1], 1.0);
  }
  const Image color{1, 1, 3, {51, 102, 255}};
  const auto tc = image_to_tensor<float>(color);
  EXPECT_FLOAT_EQ(tc.data()[0], 0.2f);
  EXPECT_FLOAT_EQ(tc.data()[1], 0.4f);
  const auto batch = images_to_tensor<float>({&gray, &gray});
  EXPECT_EQ(batch.shape(), (Shape{2, 3, 1, 2}));
  const Image other{2, 2, 1, std::vector<std::uint8_t>(4)};
  EXPECT_THROW(images_to_tensor<float>({&gray, &other}), ShapeError);

  Tensor<double> map({2, 1, 1, 2}, {0, 1, 1, 0});
  EXPECT_EQ(tensor_to_mask(map, 1).pixels, (std::vector<std::uint8_t>{1, 0}));
  Tensor<double> prob({1, 1, 1, 3}, {0.0, 0.5, 1.0});
  const auto g = tensor_to_gray(prob);
  EXPECT_EQ(g.pixels[0], 0);
  EXPECT_EQ(g.pixels[2], 255);
}

}  // namespace
}  // namespace fkcd
