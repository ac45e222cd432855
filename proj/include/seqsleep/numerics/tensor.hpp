#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "seqsleep/errors.hpp"

namespace seqsleep {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

// Dense row-major tensor. Graph operations treat rank-1 tensors as a single
// row and rank-2 tensors as (rows, cols).
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{})
      : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_size(shape_)) {
      throw Error(ErrorKind::ShapeMismatch, "tensor " + shape_string(shape_) + " given " +
                                                std::to_string(values_.size()) + " values");
    }
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T{}) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor scalar(T v) { return Tensor({1, 1}, v); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty() && shape_.empty(); }
  std::size_t rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::vector<T>& storage() { return values_; }
  const std::vector<T>& storage() const { return values_; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = static_cast<U>(values_[i]);
    return out;
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> values_;
};

}  // namespace seqsleep
