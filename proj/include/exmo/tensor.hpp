#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "exmo/errors.hpp"

namespace exmo {

using Shape = std::vector<int>;

std::string shape_string(const Shape& shape);
std::size_t shape_volume(const Shape& shape);

/// Dense row-major array with an optional gradient buffer of the same shape.
///
/// Rank-3 tensors follow the (channels, height, width) layout used by every
/// image operator in this library.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

  BasicTensor(Shape shape, const std::vector<T>& values)
      : shape_(std::move(shape)), data_(values.begin(), values.end()) {
    if (data_.size() != shape_volume(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_string(shape_));
    }
  }

  static BasicTensor chw(int channels, int height, int width, T fill = T(0)) {
    return BasicTensor(Shape{channels, height, width}, fill);
  }

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  int channels() const { return extent_from_back(3); }
  int height() const { return extent_from_back(2); }
  int width() const { return extent_from_back(1); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(int c, int y, int x) { return data_[offset(c, y, x)]; }
  const T& at(int c, int y, int x) const { return data_[offset(c, y, x)]; }

  /// Contiguous view of one channel plane of a rank-3 tensor.
  std::span<T> plane(int c) {
    const std::size_t n = static_cast<std::size_t>(height()) * width();
    return std::span<T>(data_).subspan(static_cast<std::size_t>(c) * n, n);
  }
  std::span<const T> plane(int c) const {
    const std::size_t n = static_cast<std::size_t>(height()) * width();
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(c) * n, n);
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool has_grad() const noexcept { return grad_.has_value(); }
  void enable_grad() {
    if (!grad_) grad_.emplace(data_.size(), T(0));
  }
  void zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), T(0));
  }
  void drop_grad() { grad_.reset(); }
  std::span<T> grad() {
    if (!grad_) throw ArgumentError("tensor has no gradient buffer");
    return *grad_;
  }
  std::span<const T> grad() const {
    if (!grad_) throw ArgumentError("tensor has no gradient buffer");
    return *grad_;
  }

  bool same_shape(const BasicTensor& other) const { return shape_ == other.shape_; }

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool operator==(const BasicTensor& other) const { return shape_ == other.shape_ && data_ == other.data_; }

 private:
  int extent_from_back(int k) const {
    if (rank() < k) {
      throw ShapeError("tensor of shape " + shape_string(shape_) + " has no axis " + std::to_string(rank() - k));
    }
    return shape_[shape_.size() - k];
  }

  std::size_t offset(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height() + y) * width() + x;
  }

  // Vector-width alignment keeps Eigen's kernels on one code path, so
  // results do not depend on where the allocator placed a buffer.
  using Storage = std::vector<T, Eigen::aligned_allocator<T>>;

  Shape shape_;
  Storage data_;
  std::optional<Storage> grad_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

template <typename T>
bool all_finite(std::span<const T> values);

}  // namespace exmo
