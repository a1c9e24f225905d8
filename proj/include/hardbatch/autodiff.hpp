#pragma once

#include <cstddef>
#include <vector>

#include "hardbatch/loss.hpp"
#include "hardbatch/network.hpp"
#include "hardbatch/tensor.hpp"

namespace hardbatch {

// One gradient tensor per parameter tensor, shape-matched with the network.
template <typename T>
struct GradientSet {
  struct LayerGrads {
    Tensor<T> weights;
    Tensor<T> bias;
  };
  std::vector<LayerGrads> layers;

  static GradientSet zeros_like(const MLPNetwork<T>& net) {
    GradientSet g;
    g.layers.reserve(net.layers.size());
    for (const auto& layer : net.layers) {
      g.layers.push_back({Tensor<T>::zeros(layer.weights.shape),
                          Tensor<T>::zeros(layer.bias.shape)});
    }
    return g;
  }
};

template <typename T>
struct BackwardResult {
  double loss = 0.0;
  Tensor<T> logits;  // forward output, kept for training accuracy bookkeeping
  GradientSet<T> grads;
};

// Reverse-mode gradients of the mean cross-entropy loss with respect to every
// parameter. The network itself is untouched.
template <typename T>
BackwardResult<T> backward(const MLPNetwork<T>& net, const Tensor<T>& x,
                           const std::vector<int>& labels) {
  ForwardCache<T> cache;
  BackwardResult<T> out;
  out.logits = forward_cached(net, x, cache);
  auto loss_grad = softmax_cross_entropy(out.logits, labels);
  out.loss = loss_grad.loss;
  out.grads = GradientSet<T>::zeros_like(net);

  const std::size_t batch = x.rows();
  Tensor<T> delta = std::move(loss_grad.dlogits);  // d loss / d pre_activation

  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const Layer<T>& layer = net.layers[k];
    const Tensor<T>& input_act = cache.activations[k];
    const std::size_t in = layer.in_size();
    const std::size_t out_dim = layer.out_size();

    Tensor<T>& gw = out.grads.layers[k].weights;
    Tensor<T>& gb = out.grads.layers[k].bias;
    for (std::size_t i = 0; i < batch; ++i) {
      const T* ai = &input_act.data[i * in];
      const T* di = &delta.data[i * out_dim];
      for (std::size_t j = 0; j < out_dim; ++j) gb.data[j] += di[j];
      for (std::size_t r = 0; r < in; ++r) {
        const T a = ai[r];
        T* gwr = &gw.data[r * out_dim];
        for (std::size_t j = 0; j < out_dim; ++j) gwr[j] += a * di[j];
      }
    }

    if (k == 0) break;

    // delta_prev = (delta . W^T) masked by the previous layer's activation.
    Tensor<T> delta_prev = Tensor<T>::zeros({batch, in});
    for (std::size_t i = 0; i < batch; ++i) {
      const T* di = &delta.data[i * out_dim];
      T* dpi = &delta_prev.data[i * in];
      for (std::size_t r = 0; r < in; ++r) {
        const T* wr = &layer.weights.data[r * out_dim];
        T acc = T(0);
        for (std::size_t j = 0; j < out_dim; ++j) acc += di[j] * wr[j];
        dpi[r] = acc;
      }
    }
    if (net.layers[k - 1].activation == Activation::relu) {
      const Tensor<T>& z_prev = cache.pre_activations[k - 1];
      for (std::size_t i = 0; i < delta_prev.data.size(); ++i) {
        if (!(z_prev.data[i] > T(0))) delta_prev.data[i] = T(0);
      }
    }
    delta = std::move(delta_prev);
  }
  return out;
}

}  // namespace hardbatch
