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

#include "fkcd/synthetic.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <random>

#include "fkcd/errors.hpp"
#include "fkcd/io_util.hpp"

namespace fkcd {

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synthetic spec: " + m); };
  if (height < 16 || width < 16 || height % 16 || width % 16) {
    fail("image size must be a positive multiple of 16, got " + std::to_string(height) + "x" +
         std::to_string(width));
  }
  if (n_samples < 1) fail("n_samples must be positive");
  if (min_base_shapes < 0 || max_base_shapes < min_base_shapes) fail("invalid base shape range");
  if (min_changed_shapes < 0 || max_changed_shapes < min_changed_shapes) {
    fail("invalid changed shape range");
  }
  if (min_shape_size < 1 || max_shape_size < min_shape_size) fail("invalid shape size range");
  if (2 * max_shape_size + 2 > std::min(height, width)) {
    fail("shapes of half-size " + std::to_string(max_shape_size) + " do not fit a " +
         std::to_string(height) + "x" + std::to_string(width) + " frame");
  }
  if (brightness_jitter < 0 || brightness_jitter > 100) fail("brightness_jitter must be in [0, 100]");
  if (texture_amplitude < 0 || texture_amplitude > 40) fail("texture_amplitude must be in [0, 40]");
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"seed", s.seed},
       {"image_size", {s.height, s.width}},
       {"n_samples", s.n_samples},
       {"base_shape_range", {s.min_base_shapes, s.max_base_shapes}},
       {"shape_count_range", {s.min_changed_shapes, s.max_changed_shapes}},
       {"shape_size_range", {s.min_shape_size, s.max_shape_size}},
       {"brightness_jitter", s.brightness_jitter},
       {"texture_amplitude", s.texture_amplitude}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  SyntheticSpec d;
  auto pair = [&j](const char* key, std::int64_t& a, std::int64_t& b) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw ConfigError(std::string(key) + " must be [a, b]");
    a = v[0].get<std::int64_t>();
    b = v[1].get<std::int64_t>();
  };
  d.seed = j.value("seed", d.seed);
  pair("image_size", d.height, d.width);
  d.n_samples = j.value("n_samples", d.n_samples);
  pair("base_shape_range", d.min_base_shapes, d.max_base_shapes);
  pair("shape_count_range", d.min_changed_shapes, d.max_changed_shapes);
  pair("shape_size_range", d.min_shape_size, d.max_shape_size);
  d.brightness_jitter = j.value("brightness_jitter", d.brightness_jitter);
  d.texture_amplitude = j.value("texture_amplitude", d.texture_amplitude);
  s = d;
}

Mask rasterize_disc(std::int64_t height, std::int64_t width, double cy, double cx, double radius) {
  Mask m(height, width);
  const double r2 = radius * radius;
  for (std::int64_t y = 0; y < height; ++y) {
    for (std::int64_t x = 0; x < width; ++x) {
      const double dy = static_cast<double>(y) + 0.5 - cy;
      const double dx = static_cast<double>(x) + 0.5 - cx;
      if (dy * dy + dx * dx < r2) m.at(y, x) = 1;
    }
  }
  return m;
}

Mask rasterize_rect(std::int64_t height, std::int64_t width, std::int64_t y0, std::int64_t x0,
                    std::int64_t y1, std::int64_t x1) {
  Mask m(height, width);
  for (std::int64_t y = std::max<std::int64_t>(y0, 0); y < std::min(y1, height); ++y) {
    for (std::int64_t x = std::max<std::int64_t>(x0, 0); x < std::min(x1, width); ++x) {
      m.at(y, x) = 1;
    }
  }
  return m;
}

namespace {

struct Placed {
  bool disc = false;
  std::int64_t cy = 0, cx = 0, size = 0;
  std::uint8_t level = 0;

  // Occupied box [y0, y1) x [x0, x1).
  std::int64_t y0() const { return cy - size; }
  std::int64_t y1() const { return cy + size; }
  std::int64_t x0() const { return cx - size; }
  std::int64_t x1() const { return cx + size; }

  Mask raster(std::int64_t h, std::int64_t w) const {
    return disc ? rasterize_disc(h, w, static_cast<double>(cy), static_cast<double>(cx),
                                 static_cast<double>(size))
                : rasterize_rect(h, w, y0(), x0(), y1(), x1());
  }
};

// Boxes separated by at least one pixel, so every shape is its own region.
bool separated(const Placed& a, const Placed& b) {
  return a.y1() + 1 <= b.y0() || b.y1() + 1 <= a.y0() || a.x1() + 1 <= b.x0() ||
         b.x1() + 1 <= a.x0();
}

template <typename Rng>
std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

void paint(Image& img, const Mask& m, std::uint8_t level) {
  for (std::size_t i = 0; i < m.pixels.size(); ++i) {
    if (m.pixels[i]) img.pixels[i] = level;
  }
}

}  // namespace

SyntheticSample generate_sample(const SyntheticSpec& spec, std::int64_t index) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  const std::int64_t h = spec.height, w = spec.width;

  // Static textured background shared by both dates.
  Image background{h, w, 1, std::vector<std::uint8_t>(static_cast<std::size_t>(h * w))};
  const std::int64_t base = uniform(rng, 90, 140);
  const std::int64_t a = spec.texture_amplitude;
  for (auto& p : background.pixels) p = static_cast<std::uint8_t>(base + uniform(rng, -a, a));

  const std::int64_t n_base = uniform(rng, spec.min_base_shapes, spec.max_base_shapes);
  const std::int64_t k = uniform(rng, spec.min_changed_shapes, spec.max_changed_shapes);
  std::vector<Placed> shapes;
  for (std::int64_t i = 0; i < n_base + k; ++i) {
    Placed s;
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      s.disc = uniform(rng, 0, 1) == 1;
      s.size = uniform(rng, spec.min_shape_size, spec.max_shape_size);
      s.cy = uniform(rng, s.size, h - s.size);
      s.cx = uniform(rng, s.size, w - s.size);
      ok = std::all_of(shapes.begin(), shapes.end(), [&](const Placed& o) { return separated(s, o); });
    }
    if (!ok) {
      throw ConfigError("synthetic spec: cannot place " + std::to_string(n_base + k) +
                        " separated shapes in a " + std::to_string(h) + "x" + std::to_string(w) +
                        " frame");
    }
    s.level = static_cast<std::uint8_t>(uniform(rng, 0, 1) ? uniform(rng, 185, 235)
                                                           : uniform(rng, 15, 55));
    shapes.push_back(s);
  }

  SyntheticSample out{background, background, Mask(h, w)};
  for (std::int64_t i = 0; i < n_base + k; ++i) {
    const Placed& s = shapes[static_cast<std::size_t>(i)];
    const Mask m = s.raster(h, w);
    if (i < n_base) {
      paint(out.t1, m, s.level);
      paint(out.t2, m, s.level);
      continue;
    }
    const bool inserted = uniform(rng, 0, 1) == 1;
    paint(inserted ? out.t2 : out.t1, m, s.level);
    for (std::size_t p = 0; p < m.pixels.size(); ++p) out.gt.pixels[p] |= m.pixels[p];
  }

  const std::int64_t shift = uniform(rng, -spec.brightness_jitter, spec.brightness_jitter);
  for (auto& p : out.t2.pixels) {
    p = static_cast<std::uint8_t>(std::clamp<std::int64_t>(p + shift, 0, 255));
  }
  return out;
}

SyntheticDataset generate(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticDataset d{spec, std::vector<SyntheticSample>(static_cast<std::size_t>(spec.n_samples))};
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < spec.n_samples; ++i) {
    d.samples[static_cast<std::size_t>(i)] = generate_sample(spec, i);
  }
  return d;
}

std::string dataset_hash(const SyntheticDataset& dataset) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 initialisation failed");
  }
  auto feed = [&ctx](const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw std::runtime_error("SHA-256 update failed");
  };
  const std::string spec = nlohmann::json(dataset.spec).dump();
  feed(spec.data(), spec.size());
  for (const auto& s : dataset.samples) {
    feed(s.t1.pixels.data(), s.t1.pixels.size());
    feed(s.t2.pixels.data(), s.t2.pixels.size());
    feed(s.gt.pixels.data(), s.gt.pixels.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) throw std::runtime_error("SHA-256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

namespace {

std::string sample_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu.pgm", prefix, i);
  return buf;
}

}  // namespace

void save_dataset(const SyntheticDataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    write_image((fs::path(dir) / sample_name("t1", i)).string(), s.t1);
    write_image((fs::path(dir) / sample_name("t2", i)).string(), s.t2);
    write_mask((fs::path(dir) / sample_name("gt", i)).string(), s.gt);
  }
  nlohmann::json manifest{{"spec", dataset.spec},
                          {"n_samples", dataset.samples.size()},
                          {"sha256", dataset_hash(dataset)}};
  write_file_atomic((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

SyntheticDataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file((fs::path(dir) / "manifest.json").string()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(dir + "/manifest.json: " + e.what());
  }
  SyntheticDataset d;
  d.spec = manifest.at("spec").get<SyntheticSpec>();
  const auto n = manifest.at("n_samples").get<std::size_t>();
  for (std::size_t i = 0; i < n; ++i) {
    SyntheticSample s{read_image((fs::path(dir) / sample_name("t1", i)).string()),
                      read_image((fs::path(dir) / sample_name("t2", i)).string()),
                      read_mask((fs::path(dir) / sample_name("gt", i)).string())};
    d.samples.push_back(std::move(s));
  }
  const std::string expected = manifest.at("sha256").get<std::string>();
  if (dataset_hash(d) != expected) throw FormatError(dir + ": dataset content does not match manifest hash");
  return d;
}

}  // namespace fkcd
