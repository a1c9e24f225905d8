#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hardbatch/errors.hpp"
#include "hardbatch/rng.hpp"
#include "hardbatch/tensor.hpp"

namespace hardbatch {

enum class Activation { relu, identity };

template <typename T>
struct Layer {
  Tensor<T> weights;  // [in x out]
  Tensor<T> bias;     // [out]
  Activation activation = Activation::identity;

  std::size_t in_size() const { return weights.shape[0]; }
  std::size_t out_size() const { return weights.shape[1]; }
};

// Feed-forward network: relu hidden layers, identity output (logits feed the
// loss). Adjacent layer dimensions chain by construction.
template <typename T>
struct MLPNetwork {
  std::vector<Layer<T>> layers;

  std::size_t input_size() const { return layers.front().in_size(); }
  std::size_t output_size() const { return layers.back().out_size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.numel() + layer.bias.numel();
    return n;
  }
};

// Bit-exact digest over every parameter; lets tests assert that evaluation
// and duplicate runs leave/produce identical weights.
template <typename T>
std::uint64_t parameter_checksum(const MLPNetwork<T>& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& layer : net.layers) {
    h = checksum(layer.weights, h);
    h = checksum(layer.bias, h);
  }
  return h;
}

// He-style uniform init: weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
// biases zero. Deterministic for a given seed.
template <typename T>
MLPNetwork<T> init_network(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw ConfigError("layer_sizes needs at least an input and an output size");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw ConfigError("layer sizes must be positive");
  }

  Rng rng(mix_seed(seed, seed_stream::weights));
  MLPNetwork<T> net;
  net.layers.reserve(layer_sizes.size() - 1);
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    const auto in = static_cast<std::size_t>(layer_sizes[k]);
    const auto out = static_cast<std::size_t>(layer_sizes[k + 1]);
    Layer<T> layer;
    layer.weights = Tensor<T>::zeros({in, out});
    layer.bias = Tensor<T>::zeros({out});
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    for (T& w : layer.weights.data) w = static_cast<T>(rng.uniform(-bound, bound));
    layer.activation =
        (k + 2 == layer_sizes.size()) ? Activation::identity : Activation::relu;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

namespace detail {

// z = x * W + b, rows independent of each other (i-k-j loop order).
template <typename T>
Tensor<T> affine(const Tensor<T>& x, const Layer<T>& layer) {
  const std::size_t batch = x.rows();
  const std::size_t in = layer.in_size();
  const std::size_t out = layer.out_size();
  if (x.cols() != in) {
    throw ShapeError("input has " + std::to_string(x.cols()) +
                     " columns, layer expects " + std::to_string(in));
  }
  Tensor<T> z = Tensor<T>::zeros({batch, out});
  for (std::size_t i = 0; i < batch; ++i) {
    T* zi = &z.data[i * out];
    for (std::size_t j = 0; j < out; ++j) zi[j] = layer.bias.data[j];
    const T* xi = &x.data[i * in];
    for (std::size_t k = 0; k < in; ++k) {
      const T xik = xi[k];
      const T* wk = &layer.weights.data[k * out];
      for (std::size_t j = 0; j < out; ++j) zi[j] += xik * wk[j];
    }
  }
  return z;
}

template <typename T>
void apply_activation(Tensor<T>& z, Activation act) {
  if (act == Activation::relu) {
    for (T& v : z.data) v = v > T(0) ? v : T(0);
  }
}

}  // namespace detail

// Per-layer pre-activations and activations kept for the backward pass.
// activations[0] is the input, activations[k+1] = act(pre_activations[k]).
template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> pre_activations;
  std::vector<Tensor<T>> activations;
};

template <typename T>
Tensor<T> forward_cached(const MLPNetwork<T>& net, const Tensor<T>& x,
                         ForwardCache<T>& cache) {
  cache.pre_activations.clear();
  cache.activations.clear();
  cache.activations.push_back(x);
  for (const auto& layer : net.layers) {
    Tensor<T> z = detail::affine(cache.activations.back(), layer);
    cache.pre_activations.push_back(z);
    detail::apply_activation(z, layer.activation);
    cache.activations.push_back(std::move(z));
  }
  return cache.activations.back();
}

template <typename T>
Tensor<T> forward(const MLPNetwork<T>& net, const Tensor<T>& x) {
  Tensor<T> a = x;
  for (const auto& layer : net.layers) {
    a = detail::affine(a, layer);
    detail::apply_activation(a, layer.activation);
  }
  return a;
}

}  // namespace hardbatch
