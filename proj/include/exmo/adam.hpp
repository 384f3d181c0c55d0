#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "exmo/ops.hpp"

namespace exmo {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  std::int64_t step = 0;
  std::vector<FilterBank<T>> first_moment;
  std::vector<FilterBank<T>> second_moment;
};

/// One bias-corrected adaptive-moment update. Gradients are read from each
/// parameter tensor's gradient buffer; moments are lazily sized on the first
/// call. Throws TrainingError if any gradient is missing or non-finite, in
/// which case no parameter is modified.
template <typename T>
void adam_step(std::span<FilterBank<T>> params, AdamState<T>& state, const AdamConfig& config);

}  // namespace exmo
