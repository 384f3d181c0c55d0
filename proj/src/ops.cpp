#include "exmo/ops.hpp"

#include <Eigen/Core>
#include <cmath>

namespace exmo {
namespace {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<Matrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const Matrix<T>>;

constexpr int kTaps = kKernelSize * kKernelSize;

void require_rank3(const Shape& shape, const char* what) {
  if (shape.size() != 3) {
    throw ShapeError(std::string(what) + ": expected (C,H,W) tensor, got " + shape_string(shape));
  }
}

// Patch matrix for a stride-1, pad-1 3x3 convolution: row (c*9 + ky*3 + kx),
// column (y*W + x).
template <typename T>
Matrix<T> im2col(const BasicTensor<T>& input) {
  const int channels = input.channels(), h = input.height(), w = input.width();
  Matrix<T> cols(static_cast<Eigen::Index>(channels) * kTaps, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < channels; ++c) {
    const T* src = input.plane(c).data();
    for (int ky = 0; ky < kKernelSize; ++ky) {
      for (int kx = 0; kx < kKernelSize; ++kx) {
        T* dst = cols.data() + (static_cast<std::size_t>(c) * kTaps + ky * kKernelSize + kx) * h * w;
        const int x_lo = std::max(0, 1 - kx);
        const int x_hi = std::min(w, w + 1 - kx);
        for (int y = 0; y < h; ++y) {
          T* row = dst + static_cast<std::size_t>(y) * w;
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) {
            std::fill(row, row + w, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * w;
          for (int x = 0; x < x_lo; ++x) row[x] = T(0);
          for (int x = x_lo; x < x_hi; ++x) row[x] = srow[x + kx - 1];
          for (int x = x_hi; x < w; ++x) row[x] = T(0);
        }
      }
    }
  }
  return cols;
}

template <typename T>
void col2im_add(const Matrix<T>& cols, BasicTensor<T>& out) {
  const int channels = out.channels(), h = out.height(), w = out.width();
  for (int c = 0; c < channels; ++c) {
    T* dst = out.plane(c).data();
    for (int ky = 0; ky < kKernelSize; ++ky) {
      for (int kx = 0; kx < kKernelSize; ++kx) {
        const T* src = cols.data() + (static_cast<std::size_t>(c) * kTaps + ky * kKernelSize + kx) * h * w;
        const int x_lo = std::max(0, 1 - kx);
        const int x_hi = std::min(w, w + 1 - kx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const T* row = src + static_cast<std::size_t>(y) * w;
          T* drow = dst + static_cast<std::size_t>(sy) * w;
          for (int x = x_lo; x < x_hi; ++x) drow[x + kx - 1] += row[x];
        }
      }
    }
  }
}

// Transposed-convolution weights as a (out*9, in) matrix.
template <typename T>
Matrix<T> deconv_weight_matrix(const FilterBank<T>& filters) {
  const int out_c = filters.out_channels(), in_c = filters.in_channels();
  Matrix<T> m(static_cast<Eigen::Index>(out_c) * kTaps, in_c);
  const T* w = filters.weights.data();
  for (int o = 0; o < out_c; ++o)
    for (int i = 0; i < in_c; ++i)
      for (int k = 0; k < kTaps; ++k) m(o * kTaps + k, i) = w[(static_cast<std::size_t>(o) * in_c + i) * kTaps + k];
  return m;
}

// Output coordinate reached by input coordinate `i` through tap `k`.
inline int deconv_target(int i, int k) { return 2 * i - 1 + k; }

template <typename T>
void check_bank_input(const BasicTensor<T>& input, const FilterBank<T>& filters, const char* op) {
  require_rank3(input.shape(), op);
  filters.check();
  if (input.channels() != filters.in_channels()) {
    throw ShapeError(std::string(op) + ": input has " + std::to_string(input.channels()) +
                     " channels, filters expect " + std::to_string(filters.in_channels()));
  }
  if (input.height() < 1 || input.width() < 1) {
    throw ShapeError(std::string(op) + ": empty spatial extent " + shape_string(input.shape()));
  }
}

}  // namespace

template <typename T>
void FilterBank<T>::check() const {
  const Shape& ws = weights.shape();
  if (ws.size() != 4 || ws[2] != kKernelSize || ws[3] != kKernelSize) {
    throw ShapeError("filter weights must be (O,I,3,3), got " + shape_string(ws));
  }
  if (bias.shape() != Shape{ws[0]}) {
    throw ShapeError("filter bias must be (" + std::to_string(ws[0]) + "), got " + shape_string(bias.shape()));
  }
}

std::pair<int, int> PoolIndexMap::argmax(int c, int y, int x) const {
  const std::size_t idx = (static_cast<std::size_t>(c) * output_shape[1] + y) * output_shape[2] + x;
  const int off = offsets.at(idx);
  return {2 * y + off / 2, 2 * x + off % 2};
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const FilterBank<T>& filters) {
  check_bank_input(input, filters, "conv2d");
  const int h = input.height(), w = input.width(), out_c = filters.out_channels();
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  const Matrix<T> cols = im2col(input);
  ConstMatrixMap<T> weights(filters.weights.data(), out_c, static_cast<Eigen::Index>(filters.in_channels()) * kTaps);

  auto out = BasicTensor<T>::chw(out_c, h, w);
  MatrixMap<T> result(out.data(), out_c, hw);
  result.noalias() = weights * cols;
  for (int o = 0; o < out_c; ++o) result.row(o).array() += filters.bias[o];
  return out;
}

template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& cached_input,
                                 const FilterBank<T>& filters) {
  check_bank_input(cached_input, filters, "conv2d_backward");
  const int h = cached_input.height(), w = cached_input.width(), out_c = filters.out_channels();
  if (grad_out.shape() != Shape{out_c, h, w}) {
    throw ShapeError("conv2d_backward: grad_out " + shape_string(grad_out.shape()) + " does not match output " +
                     shape_string(Shape{out_c, h, w}));
  }
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  const Eigen::Index taps = static_cast<Eigen::Index>(filters.in_channels()) * kTaps;
  ConstMatrixMap<T> g(grad_out.data(), out_c, hw);
  ConstMatrixMap<T> weights(filters.weights.data(), out_c, taps);

  ConvGradients<T> grads{BasicTensor<T>(cached_input.shape()), FilterBank<T>::zeros(out_c, filters.in_channels())};
  const Matrix<T> cols = im2col(cached_input);
  MatrixMap<T>(grads.filters.weights.data(), out_c, taps).noalias() = g * cols.transpose();
  for (int o = 0; o < out_c; ++o) {
    const T* row = grad_out.data() + o * hw;
    T acc = T(0);
    for (Eigen::Index i = 0; i < hw; ++i) acc += row[i];
    grads.filters.bias[o] = acc;
  }

  Matrix<T> dcols = weights.transpose() * g;
  col2im_add(dcols, grads.input);
  return grads;
}

template <typename T>
BasicTensor<T> deconv2d(const BasicTensor<T>& input, const FilterBank<T>& filters) {
  check_bank_input(input, filters, "deconv2d");
  const int h = input.height(), w = input.width(), out_c = filters.out_channels();
  const int oh = 2 * h, ow = 2 * w;
  const Matrix<T> wt = deconv_weight_matrix(filters);
  ConstMatrixMap<T> in(input.data(), input.channels(), static_cast<Eigen::Index>(h) * w);
  const Matrix<T> cols = wt * in;

  auto out = BasicTensor<T>::chw(out_c, oh, ow);
  for (int o = 0; o < out_c; ++o) {
    T* dst = out.plane(o).data();
    std::fill(dst, dst + static_cast<std::size_t>(oh) * ow, filters.bias[o]);
    for (int ky = 0; ky < kKernelSize; ++ky) {
      for (int kx = 0; kx < kKernelSize; ++kx) {
        const T* src = cols.data() + (static_cast<std::size_t>(o) * kTaps + ky * kKernelSize + kx) * h * w;
        for (int y = 0; y < h; ++y) {
          const int oy = deconv_target(y, ky);
          if (oy < 0 || oy >= oh) continue;
          T* drow = dst + static_cast<std::size_t>(oy) * ow;
          const T* srow = src + static_cast<std::size_t>(y) * w;
          for (int x = 0; x < w; ++x) {
            const int ox = deconv_target(x, kx);
            if (ox >= 0 && ox < ow) drow[ox] += srow[x];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
ConvGradients<T> deconv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& cached_input,
                                   const FilterBank<T>& filters) {
  check_bank_input(cached_input, filters, "deconv2d_backward");
  const int h = cached_input.height(), w = cached_input.width(), out_c = filters.out_channels();
  const int in_c = filters.in_channels();
  const int oh = 2 * h, ow = 2 * w;
  if (grad_out.shape() != Shape{out_c, oh, ow}) {
    throw ShapeError("deconv2d_backward: grad_out " + shape_string(grad_out.shape()) + " does not match output " +
                     shape_string(Shape{out_c, oh, ow}));
  }
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;

  // Gather the output gradient seen by every (tap, input pixel) pair.
  Matrix<T> gcols = Matrix<T>::Zero(static_cast<Eigen::Index>(out_c) * kTaps, hw);
  for (int o = 0; o < out_c; ++o) {
    const T* src = grad_out.plane(o).data();
    for (int ky = 0; ky < kKernelSize; ++ky) {
      for (int kx = 0; kx < kKernelSize; ++kx) {
        T* dst = gcols.data() + (static_cast<std::size_t>(o) * kTaps + ky * kKernelSize + kx) * h * w;
        for (int y = 0; y < h; ++y) {
          const int oy = deconv_target(y, ky);
          if (oy < 0 || oy >= oh) continue;
          const T* srow = src + static_cast<std::size_t>(oy) * ow;
          T* drow = dst + static_cast<std::size_t>(y) * w;
          for (int x = 0; x < w; ++x) {
            const int ox = deconv_target(x, kx);
            if (ox >= 0 && ox < ow) drow[x] = srow[ox];
          }
        }
      }
    }
  }

  const Matrix<T> wt = deconv_weight_matrix(filters);
  ConstMatrixMap<T> in(cached_input.data(), in_c, hw);

  ConvGradients<T> grads{BasicTensor<T>(cached_input.shape()), FilterBank<T>::zeros(out_c, in_c)};
  MatrixMap<T>(grads.input.data(), in_c, hw).noalias() = wt.transpose() * gcols;

  const Matrix<T> dwt = gcols * in.transpose();
  T* dw = grads.filters.weights.data();
  for (int o = 0; o < out_c; ++o)
    for (int i = 0; i < in_c; ++i)
      for (int k = 0; k < kTaps; ++k) dw[(static_cast<std::size_t>(o) * in_c + i) * kTaps + k] = dwt(o * kTaps + k, i);

  for (int o = 0; o < out_c; ++o) {
    T sum = 0;
    for (T v : grad_out.plane(o)) sum += v;
    grads.filters.bias[o] = sum;
  }
  return grads;
}

template <typename T>
std::pair<BasicTensor<T>, PoolIndexMap> maxpool2(const BasicTensor<T>& input) {
  require_rank3(input.shape(), "maxpool2");
  const int channels = input.channels(), h = input.height(), w = input.width();
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2: spatial extents must be even, got " + shape_string(input.shape()));
  }
  const int ph = h / 2, pw = w / 2;
  auto out = BasicTensor<T>::chw(channels, ph, pw);
  PoolIndexMap map{input.shape(), out.shape(), std::vector<std::uint8_t>(out.size())};
  std::size_t idx = 0;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x, ++idx) {
        std::uint8_t best = 0;
        T best_v = input.at(c, 2 * y, 2 * x);
        for (std::uint8_t k = 1; k < 4; ++k) {
          const T v = input.at(c, 2 * y + k / 2, 2 * x + k % 2);
          if (v > best_v) {
            best_v = v;
            best = k;
          }
        }
        out[idx] = best_v;
        map.offsets[idx] = best;
      }
    }
  }
  return {std::move(out), std::move(map)};
}

template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& grad_out, const PoolIndexMap& indices,
                                 const Shape& input_shape) {
  require_rank3(input_shape, "maxpool2_backward");
  const Shape expected{input_shape[0], input_shape[1] / 2, input_shape[2] / 2};
  if (indices.input_shape != input_shape || indices.output_shape != expected ||
      indices.offsets.size() != shape_volume(expected)) {
    throw ShapeError("maxpool2_backward: index map " + shape_string(indices.input_shape) +
                     " inconsistent with input shape " + shape_string(input_shape));
  }
  if (grad_out.shape() != expected) {
    throw ShapeError("maxpool2_backward: grad_out " + shape_string(grad_out.shape()) + " does not match pooled " +
                     shape_string(expected));
  }
  BasicTensor<T> grad_in(input_shape);
  std::size_t idx = 0;
  for (int c = 0; c < expected[0]; ++c)
    for (int y = 0; y < expected[1]; ++y)
      for (int x = 0; x < expected[2]; ++x, ++idx) {
        const int off = indices.offsets[idx];
        if (off > 3) throw ShapeError("maxpool2_backward: argmax offset outside 2x2 window");
        grad_in.at(c, 2 * y + off / 2, 2 * x + off % 2) += grad_out[idx];
      }
  return grad_in;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_rank3(a.shape(), "concat_channels");
  require_rank3(b.shape(), "concat_channels");
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("concat_channels: spatial mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  auto out = BasicTensor<T>::chw(a.channels() + b.channels(), a.height(), a.width());
  std::copy(a.values().begin(), a.values().end(), out.values().begin());
  std::copy(b.values().begin(), b.values().end(), out.values().begin() + a.size());
  return out;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& t, int channels) {
  require_rank3(t.shape(), "split_channels");
  if (channels < 0 || channels > t.channels()) {
    throw ShapeError("split_channels: cannot take " + std::to_string(channels) + " channels from " +
                     shape_string(t.shape()));
  }
  auto head = BasicTensor<T>::chw(channels, t.height(), t.width());
  auto tail = BasicTensor<T>::chw(t.channels() - channels, t.height(), t.width());
  std::copy(t.values().begin(), t.values().begin() + head.size(), head.values().begin());
  std::copy(t.values().begin() + head.size(), t.values().end(), tail.values().begin());
  return {std::move(head), std::move(tail)};
}

template <typename T>
BasicTensor<T> activate(const BasicTensor<T>& input, Activation kind) {
  BasicTensor<T> out(input.shape());
  auto src = input.values();
  auto dst = out.values();
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > T(0) ? src[i] : T(0);
  } else {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = T(1) / (T(1) + std::exp(-src[i]));
  }
  return out;
}

template <typename T>
BasicTensor<T> activate_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& output, Activation kind) {
  if (!grad_out.same_shape(output)) {
    throw ShapeError("activate_backward: grad_out " + shape_string(grad_out.shape()) + " vs output " +
                     shape_string(output.shape()));
  }
  BasicTensor<T> grad(output.shape());
  auto g = grad_out.values();
  auto y = output.values();
  auto dst = grad.values();
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] = y[i] > T(0) ? g[i] : T(0);
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] = g[i] * y[i] * (T(1) - y[i]);
  }
  return grad;
}

template <typename T>
double euclidean_loss(std::span<const BasicTensor<T>> batch_in, std::span<const BasicTensor<T>> batch_out) {
  if (batch_in.empty()) throw ArgumentError("euclidean_loss: empty batch");
  if (batch_in.size() != batch_out.size()) {
    throw ArgumentError("euclidean_loss: batch sizes differ (" + std::to_string(batch_in.size()) + " vs " +
                        std::to_string(batch_out.size()) + ")");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < batch_in.size(); ++n) {
    if (!batch_in[n].same_shape(batch_out[n])) {
      throw ShapeError("euclidean_loss: item " + std::to_string(n) + " shapes " +
                       shape_string(batch_in[n].shape()) + " vs " + shape_string(batch_out[n].shape()));
    }
    auto a = batch_in[n].values();
    auto b = batch_out[n].values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      total += d * d;
    }
  }
  return total / (2.0 * static_cast<double>(batch_in.size()));
}

template <typename T>
BasicTensor<T> euclidean_loss_gradient(const BasicTensor<T>& in, const BasicTensor<T>& out, std::size_t batch_size) {
  if (batch_size == 0) throw ArgumentError("euclidean_loss_gradient: empty batch");
  if (!in.same_shape(out)) {
    throw ShapeError("euclidean_loss_gradient: shapes " + shape_string(in.shape()) + " vs " +
                     shape_string(out.shape()));
  }
  BasicTensor<T> grad(out.shape());
  const T scale = T(1) / static_cast<T>(batch_size);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = (out[i] - in[i]) * scale;
  return grad;
}

#define EXMO_INSTANTIATE_OPS(T)                                                                                \
  template struct FilterBank<T>;                                                                             \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const FilterBank<T>&);                               \
  template ConvGradients<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, const FilterBank<T>&); \
  template BasicTensor<T> deconv2d(const BasicTensor<T>&, const FilterBank<T>&);                             \
  template ConvGradients<T> deconv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                              const FilterBank<T>&);                                         \
  template std::pair<BasicTensor<T>, PoolIndexMap> maxpool2(const BasicTensor<T>&);                          \
  template BasicTensor<T> maxpool2_backward(const BasicTensor<T>&, const PoolIndexMap&, const Shape&);       \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);                     \
  template std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>&, int);             \
  template BasicTensor<T> activate(const BasicTensor<T>&, Activation);                                       \
  template BasicTensor<T> activate_backward(const BasicTensor<T>&, const BasicTensor<T>&, Activation);       \
  template double euclidean_loss(std::span<const BasicTensor<T>>, std::span<const BasicTensor<T>>);          \
  template BasicTensor<T> euclidean_loss_gradient(const BasicTensor<T>&, const BasicTensor<T>&, std::size_t);

EXMO_INSTANTIATE_OPS(float)
EXMO_INSTANTIATE_OPS(double)

#undef EXMO_INSTANTIATE_OPS

}  // namespace exmo
