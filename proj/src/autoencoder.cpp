#include "exmo/autoencoder.hpp"

#include <cmath>

#include "exmo/rng.hpp"

namespace exmo {

void NetworkConfig::validate() const {
  if (base_channels < 1) throw ArgumentError("base_channels must be positive");
  if (input_frames != kStackFrames) {
    throw ArgumentError("input_frames must be " + std::to_string(kStackFrames));
  }
  constexpr int kPyramid = 1 << kStages;
  if (input_size < kPyramid || input_size % kPyramid != 0) {
    throw ArgumentError("input_size " + std::to_string(input_size) + " is not a positive multiple of " +
                        std::to_string(kPyramid));
  }
  if (stage_channels(kStages) > (1 << 20)) throw ArgumentError("base_channels too large");
}

template <typename T>
std::size_t BasicModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<StageShape> encoder_ladder(const NetworkConfig& config) {
  config.validate();
  std::vector<StageShape> ladder;
  for (int k = 1; k <= kStages; ++k) ladder.push_back({config.stage_channels(k), config.stage_size(k)});
  return ladder;
}

template <typename T>
BasicModel<T> build(const NetworkConfig& config) {
  config.validate();
  BasicModel<T> model{config, {}, {}};
  auto& layers = model.layers;
  for (int k = 1; k <= kStages; ++k) {
    const int in = k == 1 ? config.input_frames : config.stage_channels(k - 1);
    layers.push_back(FilterBank<T>::zeros(config.stage_channels(k), in));
  }
  for (int k = kStages; k >= 1; --k) {
    const int in = k == kStages ? config.stage_channels(kStages) : 2 * config.stage_channels(k + 1);
    layers.push_back(FilterBank<T>::zeros(config.stage_channels(k), in));
  }
  layers.push_back(FilterBank<T>::zeros(config.input_frames, 2 * config.stage_channels(1)));

  for (std::size_t i = 0; i < layers.size(); ++i) {
    Rng rng(derive_seed(config.seed, i));
    const double fan_in = static_cast<double>(layers[i].in_channels()) * kKernelSize * kKernelSize;
    const double limit = std::sqrt(6.0 / fan_in);
    for (T& w : layers[i].weights.values()) w = static_cast<T>(rng.uniform(-limit, limit));
  }
  return model;
}

template <typename T>
BasicTensor<T> forward(const BasicModel<T>& model, const BasicTensor<T>& input, ForwardTrace<T>* trace) {
  const NetworkConfig& cfg = model.config;
  const Shape expected{cfg.input_frames, cfg.input_size, cfg.input_size};
  if (input.shape() != expected) {
    throw ShapeError("forward: expected input " + shape_string(expected) + ", got " + shape_string(input.shape()));
  }
  if (model.layers.size() != BasicModel<T>::kLayerCount) throw ArgumentError("forward: model is not built");

  ForwardTrace<T> local;
  ForwardTrace<T>& tr = trace ? *trace : local;
  tr = ForwardTrace<T>{};
  const bool keep = trace != nullptr;

  BasicTensor<T> x = input;
  std::vector<BasicTensor<T>> skips;
  for (int k = 1; k <= kStages; ++k) {
    BasicTensor<T> e = activate(conv2d(x, model.encoder(k)), Activation::relu);
    auto [pooled, map] = maxpool2(e);
    if (keep) {
      tr.encoder_in.push_back(std::move(x));
      tr.pools.push_back(std::move(map));
    }
    skips.push_back(std::move(e));
    x = std::move(pooled);
  }
  if (keep) tr.bottleneck = x;

  BasicTensor<T> h = std::move(x);
  for (int k = kStages; k >= 1; --k) {
    BasicTensor<T> d = activate(deconv2d(h, model.decoder(k)), Activation::relu);
    BasicTensor<T> next = concat_channels(skips[k - 1], d);
    if (keep) {
      tr.decoder_in.push_back(std::move(h));
      tr.decoder_out.push_back(std::move(d));
    }
    h = std::move(next);
  }
  BasicTensor<T> out = activate(conv2d(h, model.head()), Activation::sigmoid);
  if (keep) {
    tr.input = input;
    tr.skip = std::move(skips);
    tr.head_in = std::move(h);
    tr.output = out;
  }
  return out;
}

template <typename T>
std::vector<FilterBank<T>> backward(const BasicModel<T>& model, const ForwardTrace<T>& trace,
                                    const BasicTensor<T>& grad_output) {
  if (trace.skip.size() != static_cast<std::size_t>(kStages) ||
      trace.decoder_in.size() != static_cast<std::size_t>(kStages)) {
    throw ArgumentError("backward: trace is incomplete; run forward with a trace first");
  }
  std::vector<FilterBank<T>> grads(model.layers.size());

  BasicTensor<T> g = activate_backward(grad_output, trace.output, Activation::sigmoid);
  {
    auto cg = conv2d_backward(g, trace.head_in, model.head());
    grads.back() = std::move(cg.filters);
    g = std::move(cg.input);
  }

  std::vector<BasicTensor<T>> skip_grads(kStages);
  for (int k = 1; k <= kStages; ++k) {
    const std::size_t j = static_cast<std::size_t>(kStages - k);
    auto [g_skip, g_dec] = split_channels(g, trace.skip[k - 1].channels());
    skip_grads[k - 1] = std::move(g_skip);
    g_dec = activate_backward(g_dec, trace.decoder_out[j], Activation::relu);
    auto dg = deconv2d_backward(g_dec, trace.decoder_in[j], model.decoder(k));
    grads[kStages + j] = std::move(dg.filters);
    g = std::move(dg.input);
  }

  for (int k = kStages; k >= 1; --k) {
    BasicTensor<T> ge = maxpool2_backward(g, trace.pools[k - 1], trace.skip[k - 1].shape());
    const auto& sg = skip_grads[k - 1];
    for (std::size_t i = 0; i < ge.size(); ++i) ge[i] += sg[i];
    ge = activate_backward(ge, trace.skip[k - 1], Activation::relu);
    auto cg = conv2d_backward(ge, trace.encoder_in[k - 1], model.encoder(k));
    grads[k - 1] = std::move(cg.filters);
    g = std::move(cg.input);
  }
  return grads;
}

#define EXMO_INSTANTIATE_MODEL(T)                                                                     \
  template struct BasicModel<T>;                                                                      \
  template BasicModel<T> build<T>(const NetworkConfig&);                                              \
  template BasicTensor<T> forward(const BasicModel<T>&, const BasicTensor<T>&, ForwardTrace<T>*);     \
  template std::vector<FilterBank<T>> backward(const BasicModel<T>&, const ForwardTrace<T>&,          \
                                               const BasicTensor<T>&);

EXMO_INSTANTIATE_MODEL(float)
EXMO_INSTANTIATE_MODEL(double)

#undef EXMO_INSTANTIATE_MODEL

}  // namespace exmo
