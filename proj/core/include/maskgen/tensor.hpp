#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace maskgen {

using Scalar = double;
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array. Rank-2 tensors are the common case; anything of
// higher rank is viewed as a matrix of (product of leading dims) x last dim.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = 0);
  Tensor(Shape shape, std::vector<Scalar> values);

  static Tensor vector(std::initializer_list<Scalar> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<Scalar>> rows);
  static Tensor scalar(Scalar value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::size_t rows() const;
  std::size_t cols() const;

  std::span<Scalar> values() noexcept { return values_; }
  std::span<const Scalar> values() const noexcept { return values_; }
  Scalar* data() noexcept { return values_.data(); }
  const Scalar* data() const noexcept { return values_.data(); }

  Scalar& operator[](std::size_t i) { return values_[i]; }
  Scalar operator[](std::size_t i) const { return values_[i]; }
  Scalar& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  Scalar at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<Scalar> row(std::size_t r);
  std::span<const Scalar> row(std::size_t r) const;

  void fill(Scalar value);
  Tensor reshaped(Shape shape) const;
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<Scalar> values_;
};

}  // namespace maskgen
