#pragma once

// Convolutional encoder-decoder with mirrored skip connections.
//
// Encoder stage k (k = 1..5): conv3x3 + relu produces the skip map E_k at
// size S / 2^(k-1) with base * 2^(k-1) channels, then 2x2 max pooling.
// Decoder stage k (k = 5..1): transposed conv + relu doubles the resolution
// back to E_k's size and emits c_k channels; the result is concatenated
// with E_k. A final conv3x3 + sigmoid maps the 2 * c_1 channels to the five
// reconstructed frames.

#include <cstdint>
#include <vector>

#include "exmo/frames.hpp"
#include "exmo/ops.hpp"

namespace exmo {

inline constexpr int kStages = 5;

struct NetworkConfig {
  int base_channels = 16;
  int input_frames = kStackFrames;
  int input_size = kFrameSize;
  std::uint64_t seed = 0;

  /// Throws ArgumentError if any invariant fails.
  void validate() const;

  /// Channels of encoder stage k (1-based).
  int stage_channels(int k) const { return base_channels << (k - 1); }
  /// Spatial extent after encoder stage k's pooling.
  int stage_size(int k) const { return input_size >> k; }

  bool operator==(const NetworkConfig&) const = default;
};

struct TrainingMetadata {
  std::uint32_t epochs_seen = 0;
  std::uint64_t steps_seen = 0;
  std::vector<double> loss_history;

  bool operator==(const TrainingMetadata&) const = default;
};

/// Layer layout: [0, 5) encoder convs, [5, 10) decoder transposed convs from
/// the deepest stage outward, 10 the output head.
template <typename T>
struct BasicModel {
  NetworkConfig config;
  std::vector<FilterBank<T>> layers;
  TrainingMetadata metadata;

  static constexpr std::size_t kLayerCount = 2 * kStages + 1;

  FilterBank<T>& encoder(int k) { return layers[k - 1]; }
  const FilterBank<T>& encoder(int k) const { return layers[k - 1]; }
  FilterBank<T>& decoder(int k) { return layers[kStages + (kStages - k)]; }
  const FilterBank<T>& decoder(int k) const { return layers[kStages + (kStages - k)]; }
  FilterBank<T>& head() { return layers.back(); }
  const FilterBank<T>& head() const { return layers.back(); }

  std::size_t parameter_count() const;

  template <typename U>
  BasicModel<U> cast() const {
    BasicModel<U> out{config, {}, metadata};
    for (const auto& l : layers) out.layers.push_back(l.template cast<U>());
    return out;
  }

  bool operator==(const BasicModel&) const = default;
};

using Model = BasicModel<float>;
using ModelD = BasicModel<double>;

/// Intermediate activations kept for the backward pass.
template <typename T>
struct ForwardTrace {
  BasicTensor<T> input;
  std::vector<BasicTensor<T>> encoder_in;    // input to encoder conv k
  std::vector<BasicTensor<T>> skip;          // E_k, post-relu, pre-pool
  std::vector<PoolIndexMap> pools;
  BasicTensor<T> bottleneck;
  std::vector<BasicTensor<T>> decoder_in;    // input to decoder stage k (deepest first)
  std::vector<BasicTensor<T>> decoder_out;   // post-relu transposed conv output
  BasicTensor<T> head_in;
  BasicTensor<T> output;
};

/// Layer shapes follow the channel-doubling pyramid; weights are drawn
/// uniformly in +-sqrt(6 / fan_in) from config.seed, biases zero.
template <typename T>
BasicModel<T> build(const NetworkConfig& config);

/// Reconstructs a (frames, S, S) input. Pass `trace` to keep activations for
/// backward().
template <typename T>
BasicTensor<T> forward(const BasicModel<T>& model, const BasicTensor<T>& input, ForwardTrace<T>* trace = nullptr);

inline Tensor forward(const Model& model, const FrameStack& stack) { return forward(model, stack.data); }

/// Parameter gradients (layer order) for d loss / d output = grad_output.
template <typename T>
std::vector<FilterBank<T>> backward(const BasicModel<T>& model, const ForwardTrace<T>& trace,
                                    const BasicTensor<T>& grad_output);

struct StageShape {
  int channels;
  int size;
};

/// Post-pool (channels, size) of each encoder stage, shallowest first.
std::vector<StageShape> encoder_ladder(const NetworkConfig& config);

}  // namespace exmo
