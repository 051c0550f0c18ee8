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

#ifndef FKCD_IMAGE_IO_HPP_
#define FKCD_IMAGE_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fkcd/tensor.hpp"

namespace fkcd {

// 8-bit image with interleaved channels (1 = gray, 3 = RGB), row-major.
struct Image {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 1;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::int64_t y, std::int64_t x, std::int64_t c = 0) const {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  bool operator==(const Image&) const = default;
};

// Binary map with values in {0, 1}, row-major.
struct Mask {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::uint8_t> pixels;

  Mask() = default;
  Mask(std::int64_t h, std::int64_t w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h * w), fill) {}

  std::uint8_t at(std::int64_t y, std::int64_t x) const {
    return pixels[static_cast<std::size_t>(y * width + x)];
  }
  std::uint8_t& at(std::int64_t y, std::int64_t x) {
    return pixels[static_cast<std::size_t>(y * width + x)];
  }
  std::int64_t count() const;
  bool operator==(const Mask&) const = default;
};

// Binary PGM (P5) or PPM (P6) with maxval 255. Comments in the header are
// skipped. Throws FormatError on malformed or truncated files.
Image read_image(const std::string& path);
// Writes P5 for one channel and P6 for three, atomically.
void write_image(const std::string& path, const Image& image);

// Reads a single-channel image; any nonzero pixel becomes 1.
Mask read_mask(const std::string& path);
// Writes 0/255 gray levels.
void write_mask(const std::string& path, const Mask& mask);

// Throws ShapeError if any value is outside {0, 1}.
void check_binary(const Mask& mask);

// Model input in [0, 1]: N=1 x 3 x H x W. Gray images are replicated to three
// channels.
template <Real T>
Tensor<T> image_to_tensor(const Image& image);
// Stacks equally sized images into N x 3 x H x W.
template <Real T>
Tensor<T> images_to_tensor(const std::vector<const Image*>& images);

// Extracts sample n of an N x 1 x H x W map holding exactly 0 or 1.
template <Real T>
Mask tensor_to_mask(const Tensor<T>& map, std::int64_t n = 0);
// Scales sample n of an N x 1 x H x W map in [0, 1] to gray levels.
template <Real T>
Image tensor_to_gray(const Tensor<T>& map, std::int64_t n = 0);

}  // namespace fkcd

#endif  // FKCD_IMAGE_IO_HPP_
