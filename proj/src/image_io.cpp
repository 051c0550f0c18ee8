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

#include "fkcd/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fkcd/errors.hpp"
#include "fkcd/io_util.hpp"

namespace fkcd {

namespace {

class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::int64_t next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError(path_ + ": malformed PNM header");
    }
    std::int64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (std::int64_t{1} << 31)) throw FormatError(path_ + ": PNM dimension too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError(path_ + ": malformed PNM header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  const std::string& path_;
  std::size_t pos_ = 2;
};

}  // namespace

std::int64_t Mask::count() const {
  return std::count_if(pixels.begin(), pixels.end(), [](std::uint8_t v) { return v != 0; });
}

Image read_image(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError(path + ": not a binary PGM (P5) or PPM (P6) file");
  }
  HeaderReader header(bytes, path);
  Image img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  img.width = header.next_int();
  img.height = header.next_int();
  const auto maxval = header.next_int();
  if (img.width < 1 || img.height < 1) throw FormatError(path + ": empty image");
  if (maxval != 255) {
    throw FormatError(path + ": only maxval 255 is supported, got " + std::to_string(maxval));
  }
  const std::size_t start = header.raster_start();
  const auto n = static_cast<std::size_t>(img.width * img.height * img.channels);
  if (bytes.size() < start + n) throw FormatError(path + ": truncated raster");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                    bytes.begin() + static_cast<std::ptrdiff_t>(start + n));
  return img;
}

void write_image(const std::string& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw ShapeError("write_image supports 1 or 3 channels, got " +
                     std::to_string(image.channels));
  }
  if (image.pixels.size() != static_cast<std::size_t>(image.height * image.width * image.channels)) {
    throw ShapeError("image pixel buffer does not match its dimensions");
  }
  std::string out = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                    std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(image.pixels.begin(), image.pixels.end());
  write_file_atomic(path, out);
}

Mask read_mask(const std::string& path) {
  const Image img = read_image(path);
  if (img.channels != 1) throw FormatError(path + ": masks must be single-channel PGM");
  Mask m(img.height, img.width);
  std::transform(img.pixels.begin(), img.pixels.end(), m.pixels.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v != 0); });
  return m;
}

void write_mask(const std::string& path, const Mask& mask) {
  check_binary(mask);
  Image img{mask.height, mask.width, 1, mask.pixels};
  for (auto& v : img.pixels) v = v ? 255 : 0;
  write_image(path, img);
}

void check_binary(const Mask& mask) {
  if (mask.pixels.size() != static_cast<std::size_t>(mask.height * mask.width)) {
    throw ShapeError("mask pixel buffer does not match its dimensions");
  }
  for (auto v : mask.pixels) {
    if (v > 1) throw ShapeError("mask is not binary: found value " + std::to_string(v));
  }
}

template <Real T>
Tensor<T> images_to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw ShapeError("images_to_tensor needs at least one image");
  const std::int64_t h = images[0]->height, w = images[0]->width;
  const auto n = static_cast<std::int64_t>(images.size());
  std::vector<T> data(static_cast<std::size_t>(n * 3 * h * w));
  for (std::int64_t i = 0; i < n; ++i) {
    const Image& img = *images[static_cast<std::size_t>(i)];
    if (img.height != h || img.width != w) {
      throw ShapeError("images differ in size: " + std::to_string(img.height) + "x" +
                       std::to_string(img.width) + " vs " + std::to_string(h) + "x" +
                       std::to_string(w));
    }
    if (img.channels != 1 && img.channels != 3) {
      throw ShapeError("expected a gray or RGB image, got " + std::to_string(img.channels) +
                       " channels");
    }
    for (std::int64_t c = 0; c < 3; ++c) {
      const std::int64_t src_c = img.channels == 1 ? 0 : c;
      T* plane = data.data() + ((i * 3 + c) * h * w);
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) plane[y * w + x] = T(img.at(y, x, src_c)) / T(255);
      }
    }
  }
  return Tensor<T>({n, 3, h, w}, std::move(data));
}

template <Real T>
Tensor<T> image_to_tensor(const Image& image) {
  return images_to_tensor<T>({&image});
}

template <Real T>
Mask tensor_to_mask(const Tensor<T>& map, std::int64_t n) {
  if (map.rank() != 4 || map.dim(1) != 1 || n < 0 || n >= map.dim(0)) {
    throw ShapeError("tensor_to_mask expects N x 1 x H x W, got " + shape_str(map.shape()));
  }
  Mask m(map.dim(2), map.dim(3));
  const auto src = map.data().subspan(static_cast<std::size_t>(n * m.height * m.width));
  for (std::size_t i = 0; i < m.pixels.size(); ++i) {
    if (src[i] != T(0) && src[i] != T(1)) throw ShapeError("tensor_to_mask: map is not binary");
    m.pixels[i] = src[i] == T(1);
  }
  return m;
}

template <Real T>
Image tensor_to_gray(const Tensor<T>& map, std::int64_t n) {
  if (map.rank() != 4 || map.dim(1) != 1 || n < 0 || n >= map.dim(0)) {
    throw ShapeError("tensor_to_gray expects N x 1 x H x W, got " + shape_str(map.shape()));
  }
  Image img{map.dim(2), map.dim(3), 1, {}};
  img.pixels.resize(static_cast<std::size_t>(img.height * img.width));
  const auto src = map.data().subspan(static_cast<std::size_t>(n * img.height * img.width));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::clamp(static_cast<double>(src[i]), 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return img;
}

template Tensor<float> image_to_tensor<float>(const Image&);
template Tensor<double> image_to_tensor<double>(const Image&);
template Tensor<float> images_to_tensor<float>(const std::vector<const Image*>&);
template Tensor<double> images_to_tensor<double>(const std::vector<const Image*>&);
template Mask tensor_to_mask(const Tensor<float>&, std::int64_t);
template Mask tensor_to_mask(const Tensor<double>&, std::int64_t);
template Image tensor_to_gray(const Tensor<float>&, std::int64_t);
template Image tensor_to_gray(const Tensor<double>&, std::int64_t);

}  // namespace fkcd
