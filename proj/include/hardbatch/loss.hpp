#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hardbatch/errors.hpp"
#include "hardbatch/tensor.hpp"

namespace hardbatch {

namespace detail {

// Stabilized row softmax terms. Max-subtraction keeps exp() in range for
// |logit| <= 1e4. Scalar work happens in double regardless of T.
template <typename T>
double row_cross_entropy(const T* logits, std::size_t num_classes, int label,
                         std::vector<double>* softmax_out) {
  double max_logit = static_cast<double>(logits[0]);
  for (std::size_t j = 1; j < num_classes; ++j) {
    max_logit = std::max(max_logit, static_cast<double>(logits[j]));
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < num_classes; ++j) {
    const double e = std::exp(static_cast<double>(logits[j]) - max_logit);
    if (softmax_out) (*softmax_out)[j] = e;
    sum += e;
  }
  if (softmax_out) {
    for (std::size_t j = 0; j < num_classes; ++j) (*softmax_out)[j] /= sum;
  }
  // -log softmax[label] = log(sum) - (logit[label] - max)
  return std::log(sum) -
         (static_cast<double>(logits[static_cast<std::size_t>(label)]) - max_logit);
}

template <typename T>
void check_labels(const Tensor<T>& logits, const std::vector<int>& labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("labels length " + std::to_string(labels.size()) +
                     " does not match batch size " + std::to_string(logits.rows()));
  }
  const auto num_classes = static_cast<int>(logits.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw DataError("label " + std::to_string(labels[i]) + " at row " +
                      std::to_string(i) + " outside [0, " +
                      std::to_string(num_classes) + ")");
    }
  }
}

}  // namespace detail

// Mean over the batch of -log softmax(logits)[label].
template <typename T>
double softmax_cross_entropy_loss(const Tensor<T>& logits,
                                  const std::vector<int>& labels) {
  detail::check_labels(logits, labels);
  const std::size_t batch = logits.rows();
  const std::size_t num_classes = logits.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    total += detail::row_cross_entropy(&logits.data[i * num_classes], num_classes,
                                       labels[i], nullptr);
  }
  return total / static_cast<double>(batch);
}

template <typename T>
struct LossGrad {
  double loss = 0.0;
  Tensor<T> dlogits;  // (softmax - onehot) / batch
};

template <typename T>
LossGrad<T> softmax_cross_entropy(const Tensor<T>& logits,
                                  const std::vector<int>& labels) {
  detail::check_labels(logits, labels);
  const std::size_t batch = logits.rows();
  const std::size_t num_classes = logits.cols();
  LossGrad<T> out;
  out.dlogits = Tensor<T>::zeros({batch, num_classes});
  std::vector<double> softmax(num_classes);
  double total = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    total += detail::row_cross_entropy(&logits.data[i * num_classes], num_classes,
                                       labels[i], &softmax);
    T* d = &out.dlogits.data[i * num_classes];
    for (std::size_t j = 0; j < num_classes; ++j) {
      const double onehot = (static_cast<int>(j) == labels[i]) ? 1.0 : 0.0;
      d[j] = static_cast<T>((softmax[j] - onehot) * inv_batch);
    }
  }
  out.loss = total * inv_batch;
  return out;
}

}  // namespace hardbatch
