#pragma once

// Differentiable image operators used by the autoencoder. Every forward
// operator has an explicit backward counterpart; there is no tape.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "exmo/tensor.hpp"

namespace exmo {

inline constexpr int kKernelSize = 3;

/// 3x3 filters stored as (out_channels, in_channels, 3, 3) plus one bias per
/// output channel. The same layout serves convolution and transposed
/// convolution.
template <typename T>
struct FilterBank {
  BasicTensor<T> weights;
  BasicTensor<T> bias;

  static FilterBank zeros(int out_channels, int in_channels) {
    return {BasicTensor<T>(Shape{out_channels, in_channels, kKernelSize, kKernelSize}),
            BasicTensor<T>(Shape{out_channels})};
  }

  int out_channels() const { return weights.shape().at(0); }
  int in_channels() const { return weights.shape().at(1); }

  /// Throws ShapeError unless weights are (O, I, 3, 3) and bias is (O).
  void check() const;

  template <typename U>
  FilterBank<U> cast() const {
    return {weights.template cast<U>(), bias.template cast<U>()};
  }

  bool operator==(const FilterBank&) const = default;
};

/// Window-local argmax for each pooled cell. Offsets encode `dy * 2 + dx`.
struct PoolIndexMap {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::uint8_t> offsets;

  /// Argmax of output cell (c, y, x) in input coordinates (row, col).
  std::pair<int, int> argmax(int c, int y, int x) const;
};

template <typename T>
struct ConvGradients {
  BasicTensor<T> input;
  FilterBank<T> filters;
};

enum class Activation { relu, sigmoid };

// Stride 1, zero padding 1: output has the input's spatial extents.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const FilterBank<T>& filters);

template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& cached_input,
                                 const FilterBank<T>& filters);

// Transposed convolution, stride 2, padding 1, output padding 1. Input pixel
// (y, x) scatters its 3x3 footprint centred on output pixel (2y, 2x), so
// the output is exactly twice the input in each spatial extent.
template <typename T>
BasicTensor<T> deconv2d(const BasicTensor<T>& input, const FilterBank<T>& filters);

template <typename T>
ConvGradients<T> deconv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& cached_input,
                                   const FilterBank<T>& filters);

/// 2x2 max pooling, stride 2. Ties go to the first cell in row-major order.
template <typename T>
std::pair<BasicTensor<T>, PoolIndexMap> maxpool2(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& grad_out, const PoolIndexMap& indices,
                                 const Shape& input_shape);

/// Stacks `b`'s channels after `a`'s.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Inverse of concat_channels: the first `channels` planes and the rest.
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& t, int channels);

template <typename T>
BasicTensor<T> activate(const BasicTensor<T>& input, Activation kind);

/// Backward pass expressed in terms of the forward *output*.
template <typename T>
BasicTensor<T> activate_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& output, Activation kind);

/// (1 / 2N) * sum over items and elements of (in - out)^2, accumulated in
/// double precision.
template <typename T>
double euclidean_loss(std::span<const BasicTensor<T>> batch_in, std::span<const BasicTensor<T>> batch_out);

/// Gradient of euclidean_loss with respect to one output item: (out - in) / N.
template <typename T>
BasicTensor<T> euclidean_loss_gradient(const BasicTensor<T>& in, const BasicTensor<T>& out, std::size_t batch_size);

}  // namespace exmo
