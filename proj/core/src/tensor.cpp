#include "maskgen/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "maskgen/errors.hpp"

namespace maskgen {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, Scalar fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Scalar> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw ShapeError("tensor shape " + shape_string(shape_) + " does not hold " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::initializer_list<Scalar> values) {
  return Tensor({values.size()}, std::vector<Scalar>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<Scalar>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows.begin()->size() : 0;
  std::vector<Scalar> values;
  values.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw ShapeError("ragged matrix literal");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor({n, m}, std::move(values));
}

Tensor Tensor::scalar(Scalar value) { return Tensor({1}, std::vector<Scalar>{value}); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : values_.size() / shape_.back();
}

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

std::span<Scalar> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<Scalar>(values_).subspan(r * c, c);
}

std::span<const Scalar> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const Scalar>(values_).subspan(r * c, c);
}

void Tensor::fill(Scalar value) { std::fill(values_.begin(), values_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                     shape_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](Scalar v) { return std::isfinite(v); });
}

}  // namespace maskgen
