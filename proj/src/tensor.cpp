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

#include "fkcd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fkcd {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d < 1) throw ShapeError("tensor dimensions must be >= 1, got " + shape_str(shape));
  }
}

}  // namespace

template <Real T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad) {
  check_shape(shape);
  if (static_cast<std::int64_t>(data.size()) != shape_numel(shape)) {
    throw ShapeError("element count " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

template <Real T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <Real T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  check_shape(shape);
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<T>(static_cast<std::size_t>(n), value),
                requires_grad);
}

template <Real T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <Real T>
std::int64_t Tensor<T>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw ShapeError("axis out of range for " + shape_str(shape()));
  return impl_->shape[static_cast<std::size_t>(axis)];
}

template <Real T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_str(shape()));
  return impl_->data[0];
}

template <Real T>
T Tensor<T>::at(std::initializer_list<std::int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) throw ShapeError("index rank mismatch");
  std::int64_t offset = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    const auto d = impl_->shape[axis++];
    if (i < 0 || i >= d) throw ShapeError("index out of range");
    offset = offset * d + i;
  }
  return impl_->data[static_cast<std::size_t>(offset)];
}

template <Real T>
std::span<T> Tensor<T>::mutable_grad() {
  return grad_buffer<T>(*impl_);
}

template <Real T>
Tensor<T> Tensor<T>::clone() const {
  auto impl = std::make_shared<Impl>(*impl_);
  return Tensor(std::move(impl));
}

template <Real T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(impl_->shape, impl_->data, false);
}

template <Real T>
std::vector<T>& grad_buffer(typename Tensor<T>::Impl& impl) {
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), T(0));
  return impl.grad;
}

template <Real T>
thread_local GradientTape<T>* GradientTape<T>::active_ = nullptr;

template <Real T>
GradientTape<T>::GradientTape() : previous_(active_) {
  active_ = this;
}

template <Real T>
GradientTape<T>::~GradientTape() {
  active_ = previous_;
}

template <Real T>
GradientTape<T>* GradientTape<T>::active() {
  return active_;
}

template <Real T>
void GradientTape<T>::record(std::string_view op, std::vector<ImplPtr> inputs,
                             ImplPtr output, BackwardFn backward) {
  output->requires_grad = true;
  entries_.push_back(Entry{std::string(op), std::move(inputs), std::move(output),
                           std::move(backward)});
}

template <Real T>
void GradientTape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() requires a scalar loss");
  }
  if (!loss.requires_grad()) {
    throw std::logic_error("backward() on a loss that does not track gradients");
  }
  auto& seed = grad_buffer<T>(*loss.impl());
  seed[0] += T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    for (auto& in : it->inputs) {
      if (in->requires_grad) grad_buffer<T>(*in);
    }
    if (it->output->grad.empty()) continue;
    it->backward(it->output->grad);
  }
}

template <Real T>
std::optional<std::string> GradientTape<T>::first_non_finite() const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& d = entries_[i].output->data;
    if (std::any_of(d.begin(), d.end(), [](T v) { return !std::isfinite(v); })) {
      return "output of op #" + std::to_string(i) + " '" + entries_[i].op + "' " +
             shape_str(entries_[i].output->shape);
    }
  }
  return std::nullopt;
}

template <Real T>
bool should_record(std::initializer_list<const Tensor<T>*> inputs) {
  if (GradientTape<T>::active() == nullptr) return false;
  for (const auto* t : inputs) {
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template class Tensor<float>;
template class Tensor<double>;
template class GradientTape<float>;
template class GradientTape<double>;
template bool should_record<float>(std::initializer_list<const Tensor<float>*>);
template bool should_record<double>(std::initializer_list<const Tensor<double>*>);
template std::vector<float>& grad_buffer<float>(Tensor<float>::Impl&);
template std::vector<double>& grad_buffer<double>(Tensor<double>::Impl&);

}  // namespace fkcd
