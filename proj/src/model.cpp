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

#include "fkcd/model.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "fkcd/io_util.hpp"

namespace fkcd {

// ---- model ----

template <Real T>
ChangeDetector<T>::ChangeDetector(const ModelConfig& config, std::uint64_t seed)
    : config_(config), store_(std::make_unique<WeightStore<T>>()) {
  config_.validate();
  ParamBuilder<T> root(*store_, seed);
  encoder_ = std::make_unique<Encoder<T>>(root.scoped("encoder"), config_.encoder,
                                          config_.num_stages());
  auto edm = root.scoped("edm");
  for (int s = 0; s < config_.num_stages(); ++s) {
    edm_.push_back(EdmStage<T>::make(edm.scoped("stage" + std::to_string(s + 1)),
                                     config_.encoder.stage_channels(s), config_.c_d,
                                     config_.key_dim(), config_.use_edm));
  }
  decoder_ = std::make_unique<Decoder<T>>(root.scoped("decoder"), config_);
}

template <Real T>
DifferencePyramid<T> ChangeDetector<T>::differences(const Tensor<T>& t1, const Tensor<T>& t2,
                                                    Mode mode) const {
  if (t1.shape() != t2.shape()) {
    throw ShapeError("temporal images differ in shape: " + shape_str(t1.shape()) + " vs " +
                     shape_str(t2.shape()));
  }
  if (t1.rank() != 4) throw ShapeError("expected N x C x H x W input, got " + shape_str(t1.shape()));
  config_.validate_for_input(t1.dim(2), t1.dim(3));
  const auto f1 = encoder_->encode(t1, mode);
  const auto f2 = encoder_->encode(t2, mode);
  DifferencePyramid<T> d;
  for (std::size_t s = 0; s < edm_.size(); ++s) d.push_back(edm_[s](f1.stages[s], f2.stages[s], mode));
  return d;
}

template <Real T>
ChangeMap<T> ChangeDetector<T>::forward(const Tensor<T>& t1, const Tensor<T>& t2,
                                        Mode mode) const {
  return decoder_->decode(differences(t1, t2, mode), mode);
}

template class ChangeDetector<float>;
template class ChangeDetector<double>;

// ---- parameter accounting ----

namespace param_formulas {

std::int64_t conv(std::int64_t in, std::int64_t out, std::int64_t kernel, bool bias) {
  return kernel * kernel * in * out + (bias ? out : 0);
}
std::int64_t depthwise(std::int64_t channels, std::int64_t kernel) {
  return kernel * kernel * channels + channels;
}
std::int64_t batch_norm(std::int64_t channels) { return 2 * channels; }
std::int64_t squeeze_excite(std::int64_t channels) {
  const std::int64_t r = channels / SqueezeExcite<float>::kReduction;
  return conv(channels, r, 1, true) + conv(r, channels, 1, true);
}
std::int64_t depthwise_separable(std::int64_t in, std::int64_t out) {
  return depthwise(in, 3) + conv(in, out, 1, true);
}
std::int64_t channel_mixer(std::int64_t channels, std::int64_t hidden) {
  return batch_norm(channels) + conv(channels, hidden, 1, true) + conv(hidden, channels, 1, true);
}
std::int64_t encoder_block(std::int64_t channels, bool with_se) {
  return depthwise(channels, 3) + (with_se ? squeeze_excite(channels) : 0) +
         batch_norm(channels) + 2 * conv(channels, channels, 1, true);
}
std::int64_t stage_transition(std::int64_t in) {
  return depthwise(in, 3) + conv(in, 2 * in, 1, true) + batch_norm(2 * in);
}
std::int64_t edm_stage(std::int64_t in, std::int64_t c_d, std::int64_t d_k, bool use_mask) {
  return depthwise_separable(in, in) + batch_norm(in) + squeeze_excite(in) +
         conv(in, c_d, 1, true) + (use_mask ? conv(c_d, d_k, 1, true) : 0) +
         conv(c_d, c_d, 1, false);
}
std::int64_t projection(std::int64_t channels, bool full) {
  return full ? conv(channels, channels, 1, true) : depthwise(channels, 3);
}
std::int64_t swsa(std::int64_t channels, bool full) {
  return 3 * projection(channels, full) + channel_mixer(channels, 2 * channels);
}
std::int64_t egsa(std::int64_t channels, std::int64_t patch, bool full) {
  return projection(channels, full) + 2 * conv(channels, channels, patch, true) +
         channel_mixer(channels, 2 * channels);
}
std::int64_t refine(std::int64_t channels) {
  return depthwise_separable(channels, channels) + batch_norm(channels);
}

}  // namespace param_formulas

ParamReport count_params(const ModelConfig& config) {
  namespace pf = param_formulas;
  config.validate();
  ParamReport r;
  auto push = [&r](std::string name, std::int64_t n) {
    r.modules.push_back({std::move(name), n});
    r.total += n;
  };
  const auto& enc = config.encoder;
  const int stages = config.num_stages();
  const std::int64_t c0 = enc.stem_channels;
  push("encoder.stem", pf::conv(enc.input_channels, c0, 3, true) + pf::batch_norm(c0) +
                           pf::conv(c0, c0, 3, true) + pf::batch_norm(c0));
  for (int s = 0; s < stages; ++s) {
    const std::int64_t c = enc.stage_channels(s);
    std::int64_t n = s > 0 ? pf::stage_transition(c / 2) : 0;
    for (std::int64_t b = 0; b < enc.stage_depths[static_cast<std::size_t>(s)]; ++b) {
      n += pf::encoder_block(c, b % 2 == 1);
    }
    push("encoder.stage" + std::to_string(s + 1), n);
  }
  for (int s = 0; s < stages; ++s) {
    push("edm.stage" + std::to_string(s + 1),
         pf::edm_stage(enc.stage_channels(s), config.c_d, config.key_dim(), config.use_edm));
  }
  const std::int64_t c = config.c_d;
  const bool full = config.full_projections;
  for (int level = 1; level <= stages; ++level) {
    const auto& spec = config.spec_for_level(level);
    std::int64_t n = 0;
    if (level < stages) {
      n += pf::refine(c);
      if (config.use_egsa) n += pf::egsa(c, spec.stride, full);
    }
    if (config.use_swsa) n += pf::swsa(c, full);
    if (config.use_egsa) n += pf::egsa(c, spec.stride, full);
    push("decoder.level" + std::to_string(level), n);
  }
  push("decoder.head", pf::conv(c, 1, 1, false));
  return r;
}

template <Real T>
ParamReport param_breakdown(const WeightStore<T>& store) {
  ParamReport r;
  std::map<std::string, std::size_t> index;
  for (const auto& e : store.entries()) {
    if (e.kind != TensorKind::kParameter) continue;
    auto first = e.name.find('.');
    auto second = first == std::string::npos ? first : e.name.find('.', first + 1);
    std::string module = e.name.substr(0, second);
    auto [it, inserted] = index.emplace(module, r.modules.size());
    if (inserted) r.modules.push_back({module, 0});
    r.modules[it->second].count += e.tensor.numel();
    r.total += e.tensor.numel();
  }
  return r;
}

template ParamReport param_breakdown(const WeightStore<float>&);
template ParamReport param_breakdown(const WeightStore<double>&);

// ---- FLOP accounting ----

namespace flop_formulas {

std::int64_t conv(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t out_h,
                  std::int64_t out_w) {
  return 2 * kernel * kernel * in * out * out_h * out_w;
}
std::int64_t depthwise(std::int64_t channels, std::int64_t kernel, std::int64_t out_h,
                       std::int64_t out_w) {
  return 2 * kernel * kernel * channels * out_h * out_w;
}
std::int64_t attention(std::int64_t tq, std::int64_t tk, std::int64_t d) {
  return 2 * (2 * tq * tk * d);
}

}  // namespace flop_formulas

namespace {

namespace ff = flop_formulas;

// Walks the forward graph with the same layer sequence as the model.
class FlopCounter {
 public:
  explicit FlopCounter(FlopReport& r) : r_(r) {}

  void begin(std::string module) {
    r_.modules.push_back({std::move(module), 0});
  }
  void conv(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t h, std::int64_t w) {
    bump(r_.conv, ff::conv(in, out, k, h, w));
  }
  void dw(std::int64_t c, std::int64_t k, std::int64_t h, std::int64_t w) {
    bump(r_.conv, ff::depthwise(c, k, h, w));
  }
  void ew(std::int64_t n) { bump(r_.elementwise, n); }
  // Attention over `groups` independent token sets, including the sigmoid on
  // the score matrix.
  void attn(std::int64_t groups, std::int64_t tq, std::int64_t tk, std::int64_t d) {
    bump(r_.attention, groups * ff::attention(tq, tk, d));
    ew(groups * tq * tk);
  }

  void se(std::int64_t c, std::int64_t h, std::int64_t w) {
    const std::int64_t r = c / SqueezeExcite<float>::kReduction;
    ew(c * h * w);  // global average pool
    bump(r_.dense, ff::conv(c, r, 1, 1, 1));
    ew(r);  // relu
    bump(r_.dense, ff::conv(r, c, 1, 1, 1));
    ew(c);          // sigmoid
    ew(c * h * w);  // gate
  }
  void dwsep(std::int64_t in, std::int64_t out, std::int64_t h, std::int64_t w) {
    dw(in, 3, h, w);
    conv(in, out, 1, h, w);
  }
  void mixer(std::int64_t c, std::int64_t h, std::int64_t w) {
    ew(c * h * w);  // bn
    conv(c, 2 * c, 1, h, w);
    ew(2 * c * h * w);  // gelu
    conv(2 * c, c, 1, h, w);
    ew(c * h * w);  // residual
  }
  void projection(std::int64_t c, bool full, std::int64_t h, std::int64_t w) {
    if (full) {
      conv(c, c, 1, h, w);
    } else {
      dw(c, 3, h, w);
    }
  }
  void swsa(std::int64_t c, const WindowSpec& spec, bool full, std::int64_t h, std::int64_t w) {
    for (int i = 0; i < 3; ++i) projection(c, full, h, w);
    const std::int64_t windows = (h / spec.stride) * (w / spec.stride);
    const std::int64_t tokens = spec.window * spec.window;
    attn(windows, tokens, tokens, c);
    ew(c * h * w);  // residual
    mixer(c, h, w);
  }
  void egsa(std::int64_t c, std::int64_t p, bool full, std::int64_t h, std::int64_t w) {
    projection(c, full, h, w);
    conv(c, c, p, h / p, w / p);
    conv(c, c, p, h / p, w / p);
    attn(1, h * w, (h / p) * (w / p), c);
    ew(c * h * w);  // residual
    mixer(c, h, w);
  }

 private:
  void bump(std::int64_t& category, std::int64_t n) {
    category += n;
    r_.modules.back().count += n;
  }
  FlopReport& r_;
};

}  // namespace

FlopReport estimate_flops(const ModelConfig& config, std::int64_t height, std::int64_t width) {
  config.validate_for_input(height, width);
  FlopReport r;
  FlopCounter fc(r);
  const auto& enc = config.encoder;
  const int stages = config.num_stages();
  const bool full = config.full_projections;

  // Both temporal images pass through the encoder and the per-stage preprocessing.
  for (int image = 0; image < 2; ++image) {
    std::int64_t h = height / 2, w = width / 2;
    const std::int64_t c0 = enc.stem_channels;
    fc.begin("encoder.stem");
    fc.conv(enc.input_channels, c0, 3, h, w);
    fc.ew(2 * c0 * h * w);  // bn, gelu
    h /= 2;
    w /= 2;
    fc.conv(c0, c0, 3, h, w);
    fc.ew(2 * c0 * h * w);
    for (int s = 0; s < stages; ++s) {
      fc.begin("encoder.stage" + std::to_string(s + 1));
      const std::int64_t c = enc.stage_channels(s);
      if (s > 0) {
        h /= 2;
        w /= 2;
        fc.dw(c / 2, 3, h, w);
        fc.conv(c / 2, c, 1, h, w);
        fc.ew(c * h * w);  // bn
      }
      for (std::int64_t b = 0; b < enc.stage_depths[static_cast<std::size_t>(s)]; ++b) {
        fc.dw(c, 3, h, w);
        if (b % 2 == 1) fc.se(c, h, w);
        fc.ew(c * h * w);  // bn
        fc.conv(c, c, 1, h, w);
        fc.ew(c * h * w);  // gelu
        fc.conv(c, c, 1, h, w);
        fc.ew(c * h * w);  // residual
      }
    }
  }

  const std::int64_t cd = config.c_d;
  const std::int64_t dk = config.key_dim();
  for (int s = 0; s < stages; ++s) {
    fc.begin("edm.stage" + std::to_string(s + 1));
    const std::int64_t c = enc.stage_channels(s);
    const std::int64_t h = height >> (s + 2), w = width >> (s + 2);
    for (int image = 0; image < 2; ++image) {
      fc.dwsep(c, c, h, w);
      fc.ew(2 * c * h * w);  // bn, gelu
      fc.se(c, h, w);
      fc.conv(c, cd, 1, h, w);
    }
    if (config.use_edm) {
      fc.conv(cd, dk, 1, h, w);
      fc.conv(cd, dk, 1, h, w);
      fc.ew(2 * dk * h * w);  // product, channel sum
      fc.ew(3 * h * w);       // scale, negate, sigmoid
    }
    fc.ew(2 * cd * h * w);  // difference, abs
    fc.conv(cd, cd, 1, h, w);
    if (config.use_edm) fc.ew(cd * h * w);  // mask
  }

  for (int level = stages; level >= 1; --level) {
    fc.begin("decoder.level" + std::to_string(level));
    const auto& spec = config.spec_for_level(level);
    const std::int64_t h = height >> (level + 1), w = width >> (level + 1);
    if (level < stages) {
      fc.ew(2 * cd * h * w);  // upsample, add
      fc.dwsep(cd, cd, h, w);
      fc.ew(3 * cd * h * w);  // bn, gelu, residual
      if (config.use_egsa) fc.egsa(cd, spec.stride, full, h, w);
    }
    if (config.use_swsa) fc.swsa(cd, spec, full, h, w);
    if (config.use_egsa) fc.egsa(cd, spec.stride, full, h, w);
  }
  fc.begin("decoder.head");
  fc.conv(cd, 1, 1, height / 4, width / 4);
  fc.ew(2 * height * width);  // upsample, sigmoid
  return r;
}

// ---- weight files ----

namespace {

constexpr char kMagic[4] = {'F', 'K', 'C', 'D'};

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename U>
U get_le(const std::string& in, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return static_cast<U>(v);
}

struct HeaderEntry {
  std::string name;
  Shape shape;
};

struct ParsedFile {
  std::vector<HeaderEntry> entries;
  std::size_t payload_offset = 0;
};

ParsedFile parse_header(const std::string& bytes, const std::string& path) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagicError(path + ": not a weight file (bad magic)");
  }
  if (bytes.size() < 16) throw TruncatedError(path + ": truncated before header length");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kWeightFormatVersion) {
    throw VersionError(path + ": unsupported weight format version " + std::to_string(version) +
                       " (expected " + std::to_string(kWeightFormatVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - 16) throw TruncatedError(path + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16,
                                   bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": malformed header: " + e.what());
  }
  if (!header.is_array()) throw FormatError(path + ": header is not a JSON array");
  ParsedFile parsed;
  parsed.payload_offset = 16 + header_len;
  try {
    for (const auto& item : header) {
      HeaderEntry e{item.at("name").get<std::string>(), item.at("shape").get<Shape>()};
      for (auto d : e.shape) {
        if (d < 1) throw FormatError(path + ": tensor " + e.name + " has a non-positive dimension");
      }
      if (e.shape.empty()) throw FormatError(path + ": tensor " + e.name + " has an empty shape");
      parsed.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": malformed header entry: " + e.what());
  }
  return parsed;
}

void check_payload_size(const std::string& bytes, const ParsedFile& parsed,
                        const std::string& path) {
  std::uint64_t needed = 0;
  for (const auto& e : parsed.entries) needed += 4 * static_cast<std::uint64_t>(shape_numel(e.shape));
  const std::uint64_t available = bytes.size() - parsed.payload_offset;
  if (available < needed) {
    throw TruncatedError(path + ": payload has " + std::to_string(available) + " bytes, header needs " +
                         std::to_string(needed));
  }
  if (available > needed) {
    throw FormatError(path + ": " + std::to_string(available - needed) +
                      " trailing bytes after the payload");
  }
}

template <Real T>
void read_payload(const std::string& bytes, std::size_t& offset, std::span<T> out) {
  for (auto& v : out) {
    const auto raw = get_le<std::uint32_t>(bytes, offset);
    v = static_cast<T>(std::bit_cast<float>(raw));
    offset += 4;
  }
}

bool is_buffer_name(const std::string& name) {
  auto ends_with = [&](std::string_view s) {
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  return ends_with("running_mean") || ends_with("running_var");
}

}  // namespace

template <Real T>
void save_weights(const WeightStore<T>& store, const std::string& path) {
  nlohmann::json header = nlohmann::json::array();
  for (const auto& e : store.entries()) {
    header.push_back({{"name", e.name}, {"shape", e.tensor.shape()}});
  }
  const std::string text = header.dump();
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kWeightFormatVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& e : store.entries()) {
    for (T v : e.tensor.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  write_file_atomic(path, out);
}

WeightStore<float> load_weights(const std::string& path) {
  const std::string bytes = read_file(path);
  const auto parsed = parse_header(bytes, path);
  check_payload_size(bytes, parsed, path);
  WeightStore<float> store;
  std::size_t offset = parsed.payload_offset;
  for (const auto& e : parsed.entries) {
    std::vector<float> values(static_cast<std::size_t>(shape_numel(e.shape)));
    read_payload<float>(bytes, offset, values);
    store.add(e.name, Tensor<float>(e.shape, std::move(values)),
              is_buffer_name(e.name) ? TensorKind::kBuffer : TensorKind::kParameter);
  }
  return store;
}

template <Real T>
void load_weights_into(WeightStore<T>& store, const std::string& path) {
  const std::string bytes = read_file(path);
  const auto parsed = parse_header(bytes, path);
  auto& entries = store.entries();
  for (std::size_t i = 0; i < parsed.entries.size(); ++i) {
    const auto& e = parsed.entries[i];
    if (i >= entries.size()) throw FormatError(path + ": unexpected tensor " + e.name);
    if (e.name != entries[i].name) {
      throw FormatError(path + ": expected tensor " + entries[i].name + " at position " +
                        std::to_string(i) + ", found " + e.name);
    }
    if (e.shape != entries[i].tensor.shape()) {
      throw ShapeMismatchError(e.name, path + ": tensor " + e.name + " has shape " +
                                           shape_str(e.shape) + ", model expects " +
                                           shape_str(entries[i].tensor.shape()));
    }
  }
  if (parsed.entries.size() < entries.size()) {
    throw FormatError(path + ": missing tensor " + entries[parsed.entries.size()].name);
  }
  check_payload_size(bytes, parsed, path);
  std::size_t offset = parsed.payload_offset;
  for (auto& e : entries) read_payload<T>(bytes, offset, e.tensor.mutable_data());
}

template void save_weights(const WeightStore<float>&, const std::string&);
template void save_weights(const WeightStore<double>&, const std::string&);
template void load_weights_into(WeightStore<float>&, const std::string&);
template void load_weights_into(WeightStore<double>&, const std::string&);

}  // namespace fkcd
