#pragma once

#include <cstddef>
#include <vector>

#include "hardbatch/autodiff.hpp"
#include "hardbatch/errors.hpp"
#include "hardbatch/network.hpp"
#include "hardbatch/tensor.hpp"

namespace hardbatch {

// SGD-with-momentum state: one zero-initialized velocity tensor per parameter.
template <typename T>
struct OptimizerState {
  double learning_rate = 0.0;
  double momentum = 0.0;
  GradientSet<T> velocity;

  OptimizerState(const MLPNetwork<T>& net, double learning_rate, double momentum)
      : learning_rate(learning_rate),
        momentum(momentum),
        velocity(GradientSet<T>::zeros_like(net)) {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) {
      throw ConfigError("momentum must be in [0, 1)");
    }
  }
};

namespace detail {

template <typename T>
void momentum_update(Tensor<T>& param, Tensor<T>& velocity, const Tensor<T>& grad,
                     T lr, T mu) {
  if (!param.same_shape(grad) || !param.same_shape(velocity)) {
    throw ShapeError("gradient/velocity shape does not mirror parameter shape");
  }
  for (std::size_t i = 0; i < param.data.size(); ++i) {
    velocity.data[i] = mu * velocity.data[i] + grad.data[i];
    param.data[i] -= lr * velocity.data[i];
  }
}

}  // namespace detail

// v <- mu*v + g;  w <- w - lr*v, elementwise over every parameter.
template <typename T>
void sgd_momentum_step(MLPNetwork<T>& net, const GradientSet<T>& grads,
                       OptimizerState<T>& state) {
  if (grads.layers.size() != net.layers.size() ||
      state.velocity.layers.size() != net.layers.size()) {
    throw ShapeError("gradient set does not mirror network layout");
  }
  const T lr = static_cast<T>(state.learning_rate);
  const T mu = static_cast<T>(state.momentum);
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    detail::momentum_update(net.layers[k].weights, state.velocity.layers[k].weights,
                            grads.layers[k].weights, lr, mu);
    detail::momentum_update(net.layers[k].bias, state.velocity.layers[k].bias,
                            grads.layers[k].bias, lr, mu);
  }
}

}  // namespace hardbatch
