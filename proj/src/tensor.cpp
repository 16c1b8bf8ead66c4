#include "tensor.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace advsal {

std::string to_string(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" +
         std::to_string(s.h) + "x" + std::to_string(s.w);
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.count(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.count()) {
    throw ShapeError("tensor of shape " + to_string(shape_) + " needs " +
                     std::to_string(shape_.count()) + " values, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.count() != shape_.count()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  Tensor out = *this;
  out.shape_ = shape;
  return out;
}

Tensor Tensor::item(std::size_t index) const {
  if (index >= shape_.n) {
    throw ShapeError("batch index " + std::to_string(index) + " out of range for " +
                     to_string(shape_));
  }
  const std::size_t per = shape_.per_item();
  Shape s = shape_;
  s.n = 1;
  auto first = data_.begin() + static_cast<std::ptrdiff_t>(index * per);
  return Tensor(s, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(per)));
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Tensor& t, const char* where) {
  if (!t.all_finite()) {
    throw NumericError(std::string(where) + ": non-finite value in tensor of shape " +
                       to_string(t.shape()));
  }
}

void require_same_shape(const Shape& a, const Shape& b, const char* where) {
  if (a != b) {
    throw ShapeError(std::string(where) + ": shape mismatch " + to_string(a) + " vs " +
                     to_string(b));
  }
}

Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) return Tensor();
  Shape s = items.front().shape();
  std::vector<double> values;
  values.reserve(s.per_item() * items.size());
  for (const auto& t : items) {
    Shape one = s;
    one.n = t.shape().n;
    require_same_shape(t.shape(), one, "stack");
    values.insert(values.end(), t.values().begin(), t.values().end());
  }
  std::size_t total = 0;
  for (const auto& t : items) total += t.shape().n;
  s.n = total;
  return Tensor(s, std::move(values));
}

}  // namespace advsal
