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

#ifndef FKCD_TESTS_TEST_UTIL_HPP_
#define FKCD_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <functional>
#include <random>
#include <vector>

#include "fkcd/config.hpp"
#include "fkcd/ops.hpp"
#include "fkcd/tensor.hpp"

namespace fkcd::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fkcd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

template <Real T>
Tensor<T> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                        double hi = 1.0, bool requires_grad = false) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<T> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = static_cast<T>(dist(rng));
  return Tensor<T>(shape, std::move(data), requires_grad);
}

template <Real T>
double max_abs_diff(std::span<const T> a, std::span<const T> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

// Loss L = sum(R * f(inputs)) for a fixed random R. Returns the worst relative
// error between the tape's directional derivative and a central difference
// along `directions` random unit directions over all inputs.
struct GradCheckResult {
  double worst_relative_error = 0;
  int directions = 0;
};

inline GradCheckResult grad_check(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& f,
    std::vector<Tensor<double>> inputs, std::mt19937_64& rng, int directions = 10,
    double step = 1e-6) {
  for (auto& x : inputs) x.set_requires_grad(true);
  Tensor<double> probe;
  {
    std::vector<Tensor<double>> detached;
    for (const auto& x : inputs) detached.push_back(x.detach());
    probe = f(detached);
  }
  const auto weights = random_tensor<double>(probe.shape(), rng, -1.0, 1.0);
  auto loss_of = [&](const std::vector<Tensor<double>>& xs) { return sum(mul(f(xs), weights)); };

  for (auto& x : inputs) x.zero_grad();
  {
    GradientTape<double> tape;
    auto loss = loss_of(inputs);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> grads;
  for (auto& x : inputs) {
    std::vector<double> g(static_cast<std::size_t>(x.numel()), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), g.begin());
    grads.push_back(std::move(g));
  }

  GradCheckResult result;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int d = 0; d < directions; ++d) {
    std::vector<std::vector<double>> u;
    double norm = 0;
    for (const auto& x : inputs) {
      std::vector<double> v(static_cast<std::size_t>(x.numel()));
      for (auto& e : v) {
        e = normal(rng);
        norm += e * e;
      }
      u.push_back(std::move(v));
    }
    norm = std::sqrt(norm);
    double analytic = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t k = 0; k < u[i].size(); ++k) {
        u[i][k] /= norm;
        analytic += grads[i][k] * u[i][k];
      }
    }
    auto shifted = [&](double sign) {
      std::vector<Tensor<double>> xs;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto x = inputs[i].detach().clone();
        auto data = x.mutable_data();
        for (std::size_t k = 0; k < data.size(); ++k) data[k] += sign * step * u[i][k];
        xs.push_back(x);
      }
      return loss_of(xs).item();
    };
    const double numeric = (shifted(1.0) - shifted(-1.0)) / (2.0 * step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    result.worst_relative_error =
        std::max(result.worst_relative_error, std::abs(analytic - numeric) / denom);
    ++result.directions;
  }
  return result;
}

// Same check along random directions in parameter space. `loss` must build a
// scalar from the (shared-storage) parameter tensors each time it is called.
inline GradCheckResult param_grad_check(const std::function<Tensor<double>()>& loss,
                                        const std::vector<Tensor<double>>& params,
                                        std::mt19937_64& rng, int directions = 10,
                                        double step = 1e-6) {
  auto ps = params;
  for (auto& p : ps) p.zero_grad();
  {
    GradientTape<double> tape;
    auto l = loss();
    tape.backward(l);
  }
  std::vector<std::vector<double>> grads;
  for (auto& p : ps) {
    std::vector<double> g(static_cast<std::size_t>(p.numel()), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), g.begin());
    grads.push_back(std::move(g));
  }
  GradCheckResult result;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int d = 0; d < directions; ++d) {
    std::vector<std::vector<double>> u;
    double norm = 0;
    for (const auto& p : ps) {
      std::vector<double> v(static_cast<std::size_t>(p.numel()));
      for (auto& e : v) {
        e = normal(rng);
        norm += e * e;
      }
      u.push_back(std::move(v));
    }
    norm = std::sqrt(norm);
    double analytic = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t k = 0; k < u[i].size(); ++k) {
        u[i][k] /= norm;
        analytic += grads[i][k] * u[i][k];
      }
    }
    std::vector<std::vector<double>> saved;
    for (const auto& p : ps) saved.emplace_back(p.data().begin(), p.data().end());
    auto shifted = [&](double amount) {
      for (std::size_t i = 0; i < ps.size(); ++i) {
        auto data = ps[i].mutable_data();
        for (std::size_t k = 0; k < data.size(); ++k) data[k] = saved[i][k] + amount * u[i][k];
      }
      return loss().item();
    };
    const double plus = shifted(step);
    const double minus = shifted(-step);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      std::copy(saved[i].begin(), saved[i].end(), ps[i].mutable_data().begin());
    }
    const double numeric = (plus - minus) / (2.0 * step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    result.worst_relative_error =
        std::max(result.worst_relative_error, std::abs(analytic - numeric) / denom);
    ++result.directions;
  }
  return result;
}

// Toy model at 32x32: windows shrunk so every level tiles its map.
inline ModelConfig toy_config_32() {
  auto c = toy_config();
  c.decoder.window_specs = {{2, 2}, {4, 4}, {8, 4}};
  return c;
}

// ---- nested-loop oracles ----

inline std::vector<double> conv_oracle(const std::vector<double>& x, std::int64_t n,
                                       std::int64_t cin, std::int64_t h, std::int64_t w,
                                       const std::vector<double>& weight, std::int64_t cout,
                                       std::int64_t k, const std::vector<double>& bias,
                                       std::int64_t stride, std::int64_t pad, bool depthwise) {
  const std::int64_t ho = (h + 2 * pad - k) / stride + 1, wo = (w + 2 * pad - k) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(n * cout * ho * wo), 0.0);
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t co = 0; co < cout; ++co)
      for (std::int64_t oy = 0; oy < ho; ++oy)
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(co)];
          const std::int64_t c_begin = depthwise ? co : 0, c_end = depthwise ? co + 1 : cin;
          for (std::int64_t ci = c_begin; ci < c_end; ++ci)
            for (std::int64_t ky = 0; ky < k; ++ky)
              for (std::int64_t kx = 0; kx < k; ++kx) {
                const std::int64_t iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                const std::int64_t wc = depthwise ? 0 : ci;
                const std::int64_t win = depthwise ? 1 : cin;
                acc += x[static_cast<std::size_t>(((b * cin + ci) * h + iy) * w + ix)] *
                       weight[static_cast<std::size_t>(((co * win + wc) * k + ky) * k + kx)];
              }
          out[static_cast<std::size_t>(((b * cout + co) * ho + oy) * wo + ox)] = acc;
        }
  return out;
}

// sigmoid(q^T k / sqrt(d)) v^T on channel-major token sets, one batch item.
inline std::vector<double> attention_oracle(const std::vector<double>& q,
                                            const std::vector<double>& k,
                                            const std::vector<double>& v, std::int64_t d,
                                            std::int64_t tq, std::int64_t tk) {
  std::vector<double> out(static_cast<std::size_t>(d * tq), 0.0);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::int64_t i = 0; i < tq; ++i)
    for (std::int64_t j = 0; j < tk; ++j) {
      double dot = 0;
      for (std::int64_t c = 0; c < d; ++c) dot += q[c * tq + i] * k[c * tk + j];
      const double a = 1.0 / (1.0 + std::exp(-dot * s));
      for (std::int64_t c = 0; c < d; ++c) out[c * tq + i] += a * v[c * tk + j];
    }
  return out;
}

}  // namespace fkcd::testing

#endif  // FKCD_TESTS_TEST_UTIL_HPP_
