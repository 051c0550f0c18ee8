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

#ifndef FKCD_TENSOR_HPP_
#define FKCD_TENSOR_HPP_

#include <concepts>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fkcd/errors.hpp"

namespace fkcd {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
concept Real = std::same_as<T, float> || std::same_as<T, double>;

// Dense row-major array with optional gradient tracking. Copies share the
// underlying buffer; use clone() for an independent copy. Feature maps use
// the N x C x H x W layout throughout.
template <Real T>
class Tensor {
 public:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until a backward pass reaches this tensor
    bool requires_grad = false;
  };

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t dim(int axis) const;
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  std::span<const T> data() const { return impl_->data; }
  // In-place access for initialization and optimizer updates only.
  std::span<T> mutable_data() { return impl_->data; }
  T item() const;
  T at(std::initializer_list<std::int64_t> index) const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }
  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  std::span<T> mutable_grad();
  void zero_grad() { impl_->grad.clear(); }

  Tensor clone() const;
  Tensor detach() const;  // fresh untracked copy

  const std::shared_ptr<Impl>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;
};

// Single-owner record of differentiable operations. Constructing a tape makes
// it the active tape of the calling thread until it is destroyed; operations
// whose inputs require gradients append an entry to the active tape. With no
// active tape nothing is recorded and outputs do not track gradients.
template <Real T>
class GradientTape {
 public:
  using ImplPtr = std::shared_ptr<typename Tensor<T>::Impl>;
  // Receives the gradient of the entry's output; accumulates into inputs.
  using BackwardFn = std::function<void(std::span<const T> grad_out)>;

  GradientTape();
  ~GradientTape();
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  static GradientTape* active();

  void record(std::string_view op, std::vector<ImplPtr> inputs, ImplPtr output,
              BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and runs the chain rule over recorded entries
  // in reverse order.
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return entries_.size(); }
  std::string_view op_name(std::size_t i) const { return entries_[i].op; }

  // Name and position of the first recorded output holding NaN or Inf.
  std::optional<std::string> first_non_finite() const;

 private:
  struct Entry {
    std::string op;
    std::vector<ImplPtr> inputs;
    ImplPtr output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
  GradientTape* previous_ = nullptr;
  static thread_local GradientTape* active_;
};

// True when an active tape exists and any input tracks gradients.
template <Real T>
bool should_record(std::initializer_list<const Tensor<T>*> inputs);

// Accumulates grad into the impl's gradient buffer, allocating it on demand.
template <Real T>
std::vector<T>& grad_buffer(typename Tensor<T>::Impl& impl);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class GradientTape<float>;
extern template class GradientTape<double>;

}  // namespace fkcd

#endif  // FKCD_TENSOR_HPP_
