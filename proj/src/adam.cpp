#include "exmo/adam.hpp"

#include <cmath>
#include <string>

namespace exmo {
namespace {

template <typename T>
void update(BasicTensor<T>& param, BasicTensor<T>& m, BasicTensor<T>& v, const AdamConfig& cfg, double correction1,
            double correction2) {
  auto g = param.grad();
  auto p = param.values();
  auto mv = m.values();
  auto vv = v.values();
  const double lr = cfg.learning_rate;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    const double mi = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * gi;
    const double vi = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gi * gi;
    mv[i] = static_cast<T>(mi);
    vv[i] = static_cast<T>(vi);
    const double m_hat = mi / correction1;
    const double v_hat = vi / correction2;
    p[i] = static_cast<T>(p[i] - lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
  }
}

}  // namespace

template <typename T>
void adam_step(std::span<FilterBank<T>> params, AdamState<T>& state, const AdamConfig& config) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (const BasicTensor<T>* t : {&params[i].weights, &params[i].bias}) {
      if (!t->has_grad()) throw TrainingError("adam_step: layer " + std::to_string(i) + " has no gradient");
      if (!all_finite(t->grad())) {
        throw TrainingError("adam_step: non-finite gradient in layer " + std::to_string(i));
      }
    }
  }
  if (state.first_moment.size() != params.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (const auto& bank : params) {
      state.first_moment.push_back(FilterBank<T>::zeros(bank.out_channels(), bank.in_channels()));
      state.second_moment.push_back(FilterBank<T>::zeros(bank.out_channels(), bank.in_channels()));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (!m.weights.same_shape(params[i].weights) || !m.bias.same_shape(params[i].bias)) {
      throw ShapeError("adam_step: optimizer state shape differs from layer " + std::to_string(i));
    }
    update(params[i].weights, m.weights, v.weights, config, c1, c2);
    update(params[i].bias, m.bias, v.bias, config, c1, c2);
  }
}

template void adam_step<float>(std::span<FilterBank<float>>, AdamState<float>&, const AdamConfig&);
template void adam_step<double>(std::span<FilterBank<double>>, AdamState<double>&, const AdamConfig&);

}  // namespace exmo
