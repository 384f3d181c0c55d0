#include "exmo/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <type_traits>

#include "exmo/autoencoder.hpp"
#include "exmo/errors.hpp"
#include "exmo/ops.hpp"
#include "exmo/rng.hpp"

namespace exmo {

Precision parse_precision(const std::string& s) {
  if (s == "single" || s == "float" || s == "float32") return Precision::single;
  if (s == "double" || s == "float64") return Precision::double_;
  throw ArgumentError("unknown precision '" + s + "' (single, double)");
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  const double diff = std::abs(analytic - numeric);
  return scale < floor ? diff : diff / scale;
}

namespace {

template <typename T>
struct Settings {
  double step;
  double floor;
  double tolerance;
  double network_tolerance;
};

template <typename T>
Settings<T> settings();

template <>
Settings<double> settings<double>() {
  return {1e-6, 1e-7, 1e-4, 1e-3};
}

template <>
Settings<float> settings<float>() {
  return {1e-2, 1e-3, 1e-2, 0.0};
}

template <typename T>
BasicTensor<T> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  BasicTensor<T> t(shape);
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

/// Dot product with a fixed probe turns a tensor-valued output into a scalar.
template <typename T>
double probe_dot(const BasicTensor<T>& out, const BasicTensor<T>& probe) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += static_cast<double>(out[i]) * static_cast<double>(probe[i]);
  return s;
}

/// Perturbs `indices` of `param` in turn and compares the central difference
/// of `objective` with `analytic` at the same positions.
template <typename T>
void compare(BasicTensor<T>& param, const BasicTensor<T>& analytic, const std::function<double()>& objective,
             const std::vector<std::size_t>& indices, const Settings<T>& s, GradCheckRow& row) {
  for (std::size_t i : indices) {
    const T saved = param[i];
    param[i] = static_cast<T>(saved + s.step);
    const double up = objective();
    param[i] = static_cast<T>(saved - s.step);
    const double down = objective();
    param[i] = saved;
    const double numeric = (up - down) / (2.0 * s.step);
    row.max_rel_error = std::max(row.max_rel_error, relative_error(static_cast<double>(analytic[i]), numeric, s.floor));
    ++row.checked;
  }
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

template <typename T>
GradCheckRow check_conv(Rng& rng, bool transposed) {
  const auto s = settings<T>();
  GradCheckRow row{transposed ? "deconv2d" : "conv2d", 0.0, s.tolerance, 0};
  const Shape in_shape = transposed ? Shape{2, 4, 4} : Shape{2, 8, 8};
  auto input = random_tensor<T>(in_shape, rng);
  FilterBank<T> filters{random_tensor<T>({3, 2, 3, 3}, rng, -0.5, 0.5), random_tensor<T>({3}, rng, -0.5, 0.5)};
  auto run = [&] { return transposed ? deconv2d(input, filters) : conv2d(input, filters); };
  const auto probe = random_tensor<T>(run().shape(), rng);
  const auto grads = transposed ? deconv2d_backward(probe, input, filters) : conv2d_backward(probe, input, filters);
  auto objective = [&] { return probe_dot(run(), probe); };
  compare(input, grads.input, objective, all_indices(input.size()), s, row);
  compare(filters.weights, grads.filters.weights, objective, all_indices(filters.weights.size()), s, row);
  compare(filters.bias, grads.filters.bias, objective, all_indices(filters.bias.size()), s, row);
  return row;
}

template <typename T>
GradCheckRow check_pool(Rng& rng) {
  const auto s = settings<T>();
  GradCheckRow row{"maxpool2", 0.0, s.tolerance, 0};
  // Distinct values spaced well beyond the step keep every argmax stable.
  BasicTensor<T> input(Shape{2, 8, 8});
  std::vector<std::size_t> order = all_indices(input.size());
  rng.shuffle(order);
  for (std::size_t i = 0; i < order.size(); ++i) input[order[i]] = static_cast<T>(-1.0 + 0.03 * i);
  const auto [out, map] = maxpool2(input);
  const auto probe = random_tensor<T>(out.shape(), rng);
  const auto grad = maxpool2_backward(probe, map, input.shape());
  compare(input, grad, [&] { return probe_dot(maxpool2(input).first, probe); }, all_indices(input.size()), s, row);
  return row;
}

template <typename T>
GradCheckRow check_activation(Rng& rng, Activation kind) {
  const auto s = settings<T>();
  GradCheckRow row{kind == Activation::relu ? "relu" : "sigmoid", 0.0, s.tolerance, 0};
  auto input = random_tensor<T>({2, 8, 8}, rng, -2.0, 2.0);
  // Stay clear of the relu kink.
  for (auto& v : input.values()) {
    if (std::abs(v) < 0.1) v = static_cast<T>(v < 0 ? -0.1 : 0.1);
  }
  const auto out = activate(input, kind);
  const auto probe = random_tensor<T>(out.shape(), rng);
  const auto grad = activate_backward(probe, out, kind);
  compare(input, grad, [&] { return probe_dot(activate(input, kind), probe); }, all_indices(input.size()), s, row);
  return row;
}

template <typename T>
GradCheckRow check_loss(Rng& rng) {
  const auto s = settings<T>();
  GradCheckRow row{"euclidean_loss", 0.0, s.tolerance, 0};
  std::vector<BasicTensor<T>> in{random_tensor<T>({2, 8, 8}, rng, 0, 1), random_tensor<T>({2, 8, 8}, rng, 0, 1)};
  std::vector<BasicTensor<T>> out{random_tensor<T>({2, 8, 8}, rng, 0, 1), random_tensor<T>({2, 8, 8}, rng, 0, 1)};
  auto objective = [&] {
    return euclidean_loss<T>(std::span<const BasicTensor<T>>(in), std::span<const BasicTensor<T>>(out));
  };
  for (std::size_t b = 0; b < out.size(); ++b) {
    const auto grad = euclidean_loss_gradient(in[b], out[b], out.size());
    compare(out[b], grad, objective, all_indices(out[b].size()), s, row);
  }
  return row;
}

template <typename T>
GradCheckRow check_network(Rng& rng, std::uint64_t seed) {
  const auto s = settings<T>();
  GradCheckRow row{"autoencoder", 0.0, s.network_tolerance, 0};
  NetworkConfig config;
  config.base_channels = 2;
  config.input_size = 32;
  config.seed = seed;
  auto model = build<T>(config);
  // Small positive biases keep most relu units active, so the perturbation
  // rarely crosses a kink.
  for (auto& layer : model.layers) {
    for (auto& b : layer.bias.values()) b = static_cast<T>(rng.uniform(0.05, 0.15));
  }
  const auto input = random_tensor<T>({kStackFrames, 32, 32}, rng, 0, 1);
  const auto target = random_tensor<T>({kStackFrames, 32, 32}, rng, 0, 1);
  ForwardTrace<T> trace;
  const auto out = forward(model, input, &trace);
  const auto grad_out = euclidean_loss_gradient(target, out, 1);
  const auto grads = backward(model, trace, grad_out);
  auto objective = [&] {
    const std::vector<BasicTensor<T>> a{target}, b{forward(model, input)};
    return euclidean_loss<T>(std::span<const BasicTensor<T>>(a), std::span<const BasicTensor<T>>(b));
  };
  for (int k = 0; k < 20; ++k) {
    const std::size_t layer = rng.below(model.layers.size());
    auto& w = model.layers[layer].weights;
    compare(w, grads[layer].weights, objective, {static_cast<std::size_t>(rng.below(w.size()))}, s, row);
  }
  return row;
}

template <typename T>
std::vector<GradCheckRow> run_all(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6c));
  std::vector<GradCheckRow> rows;
  rows.push_back(check_conv<T>(rng, false));
  rows.push_back(check_conv<T>(rng, true));
  rows.push_back(check_pool<T>(rng));
  rows.push_back(check_activation<T>(rng, Activation::relu));
  rows.push_back(check_activation<T>(rng, Activation::sigmoid));
  rows.push_back(check_loss<T>(rng));
  // Single-precision differences through eleven layers are dominated by
  // rounding, so the end-to-end row runs in double only.
  if constexpr (std::is_same_v<T, double>) rows.push_back(check_network<T>(rng, seed));
  return rows;
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck(Precision precision, std::uint64_t seed) {
  return precision == Precision::double_ ? run_all<double>(seed) : run_all<float>(seed);
}

}  // namespace exmo
