#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hardbatch/batching.hpp"
#include "hardbatch/errors.hpp"
#include "hardbatch/loss.hpp"
#include "hardbatch/network.hpp"

namespace hardbatch {

// One measurement per epoch-equivalent checkpoint, i.e. each time the
// cumulative back-prop count crosses a multiple of N. Both training loops
// emit these, which is what makes their curves comparable at equal budgets.
struct MetricsRecord {
  std::int64_t backprop_count = 0;
  double epoch_equivalent = 0.0;  // backprop_count / N
  double train_loss = 0.0;
  double train_top1 = 0.0;  // percent
  double test_loss = 0.0;
  double test_top1 = 0.0;  // percent
  double wall_seconds = 0.0;
  std::optional<int> round_index;  // proposed-loop rounds only
};

template <typename T>
std::int64_t top1_correct(const Tensor<T>& logits, const std::vector<int>& labels) {
  const std::size_t batch = logits.rows();
  const std::size_t num_classes = logits.cols();
  if (labels.size() != batch) throw ShapeError("labels length does not match batch");
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < batch; ++i) {
    const T* row = &logits.data[i * num_classes];
    std::size_t best = 0;
    for (std::size_t j = 1; j < num_classes; ++j) {
      if (row[j] > row[best]) best = j;  // ties keep the lowest class index
    }
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return correct;
}

template <typename T>
double top1_accuracy(const Tensor<T>& logits, const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  return 100.0 * static_cast<double>(top1_correct(logits, labels)) /
         static_cast<double>(labels.size());
}

struct EvalResult {
  double loss = 0.0;
  double top1 = 0.0;  // percent
};

// Forward-only pass over a batch list; metrics are means weighted by batch
// size, so the result does not depend on how the set was partitioned.
template <typename T>
EvalResult evaluate(const MLPNetwork<T>& net, const std::vector<MiniBatch<T>>& batches) {
  double loss_sum = 0.0;
  std::int64_t correct = 0;
  std::int64_t total = 0;
  for (const auto& batch : batches) {
    const Tensor<T> logits = forward(net, batch.x);
    loss_sum += softmax_cross_entropy_loss(logits, batch.y) *
                static_cast<double>(batch.size());
    correct += top1_correct(logits, batch.y);
    total += static_cast<std::int64_t>(batch.size());
  }
  if (total == 0) return {};
  return {loss_sum / static_cast<double>(total),
          100.0 * static_cast<double>(correct) / static_cast<double>(total)};
}

// Centered 3-point moving average, window clipped at the ends.
inline std::vector<double> smooth3(const std::vector<double>& series) {
  const std::size_t n = series.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = series[i];
    int count = 1;
    if (i > 0) {
      sum += series[i - 1];
      ++count;
    }
    if (i + 1 < n) {
      sum += series[i + 1];
      ++count;
    }
    out[i] = sum / count;
  }
  return out;
}

// Plateau rule on an already-smoothed loss series: the first epoch whose loss
// is within a factor (1 + tau) of the series minimum.
inline double first_epoch_within_tolerance(const std::vector<double>& smoothed_losses,
                                           const std::vector<double>& epochs,
                                           double tau) {
  if (smoothed_losses.empty() || smoothed_losses.size() != epochs.size()) {
    throw DataError("loss series and epoch series must be non-empty and aligned");
  }
  double lowest = smoothed_losses[0];
  for (double v : smoothed_losses) lowest = std::min(lowest, v);
  const double threshold = (1.0 + tau) * lowest;
  for (std::size_t i = 0; i < smoothed_losses.size(); ++i) {
    if (smoothed_losses[i] <= threshold) return epochs[i];
  }
  return epochs.back();
}

// Convergence epoch e: smallest epoch-equivalent whose 3-point-smoothed train
// loss is within (1 + tau) of the run minimum. Scale-invariant.
inline double detect_convergence_epoch(const std::vector<MetricsRecord>& records,
                                       double tau = 0.02) {
  if (records.size() < 2) {
    throw DataError("convergence detection needs at least two checkpoint records");
  }
  std::vector<double> losses, epochs;
  losses.reserve(records.size());
  epochs.reserve(records.size());
  for (const auto& r : records) {
    losses.push_back(r.train_loss);
    epochs.push_back(r.epoch_equivalent);
  }
  return first_epoch_within_tolerance(smooth3(losses), epochs, tau);
}

// Percentage change in convergence epoch vs the delta=1 baseline; positive
// means the compared run converged faster.
inline double compute_delta_e(double e_base, double e_delta) {
  if (!(e_base > 0.0) || !(e_delta > 0.0)) {
    throw DataError("convergence epochs must be positive");
  }
  return 100.0 * (e_base - e_delta) / e_delta;
}

// Mean wall seconds per back-propagation over a whole run.
inline double compute_delta_t(const std::vector<MetricsRecord>& records) {
  if (records.empty() || records.back().backprop_count <= 0) {
    throw DataError("delta_t needs at least one checkpoint with back-props");
  }
  return records.back().wall_seconds /
         static_cast<double>(records.back().backprop_count);
}

inline double compute_delta_delta_t(const std::vector<MetricsRecord>& run,
                                    const std::vector<MetricsRecord>& baseline) {
  return compute_delta_t(run) - compute_delta_t(baseline);
}

}  // namespace hardbatch
