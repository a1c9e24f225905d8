#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hardbatch/dataset.hpp"
#include "hardbatch/errors.hpp"
#include "hardbatch/rng.hpp"
#include "hardbatch/tensor.hpp"

namespace hardbatch {

// Immutable (id, features, labels) unit. Ids index into BatchPlan::train_batches.
template <typename T>
struct MiniBatch {
  int id = 0;
  Tensor<T> x;         // [rows x dim]
  std::vector<int> y;  // length rows

  std::size_t size() const { return y.size(); }
};

// Fixed partition of both splits into mini-batches. Built once per run seed;
// batch membership never changes afterwards, which is what keeps the loss
// ledger's (batch, loss) pairing meaningful.
template <typename T>
struct BatchPlan {
  std::vector<MiniBatch<T>> train_batches;  // length N
  std::vector<MiniBatch<T>> test_batches;   // length M
  int batch_size = 0;
  std::uint64_t shuffle_seed = 0;

  int num_train_batches() const { return static_cast<int>(train_batches.size()); }
  int num_test_batches() const { return static_cast<int>(test_batches.size()); }
};

namespace detail {

template <typename T>
std::vector<MiniBatch<T>> partition(const Dataset<T>& ds,
                                    const std::vector<std::size_t>& order, int batch_size) {
  const std::size_t n = order.size();
  const std::size_t dim = ds.dim();
  const auto bs = static_cast<std::size_t>(batch_size);
  std::vector<MiniBatch<T>> batches;
  batches.reserve((n + bs - 1) / bs);
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t rows = std::min(bs, n - start);
    MiniBatch<T> mb;
    mb.id = static_cast<int>(batches.size());
    mb.x = Tensor<T>::zeros({rows, dim});
    mb.y.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t src = order[start + r];
      for (std::size_t j = 0; j < dim; ++j) mb.x.at(r, j) = ds.features.at(src, j);
      mb.y.push_back(ds.labels[src]);
    }
    batches.push_back(std::move(mb));
  }
  return batches;
}

}  // namespace detail

// One seeded shuffle of the training set, then a contiguous partition into
// N = ceil(num_train / B) batches (last one ragged). The test split is
// partitioned unshuffled into M = ceil(num_test / B).
template <typename T>
BatchPlan<T> make_batches(const Dataset<T>& train, const Dataset<T>& test,
                          int batch_size, std::uint64_t shuffle_seed) {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (static_cast<std::size_t>(batch_size) > train.size()) {
    throw ConfigError("batch size " + std::to_string(batch_size) +
                      " exceeds training set size " + std::to_string(train.size()));
  }
  std::vector<std::size_t> train_order(train.size());
  std::iota(train_order.begin(), train_order.end(), std::size_t(0));
  Rng rng(mix_seed(shuffle_seed, seed_stream::shuffle));
  rng.shuffle(train_order);

  std::vector<std::size_t> test_order(test.size());
  std::iota(test_order.begin(), test_order.end(), std::size_t(0));

  BatchPlan<T> plan;
  plan.batch_size = batch_size;
  plan.shuffle_seed = shuffle_seed;
  plan.train_batches = detail::partition(train, train_order, batch_size);
  plan.test_batches = detail::partition(test, test_order, batch_size);
  return plan;
}

// Bit-exact digest of a batch's contents; used to verify batches stay frozen
// across a whole run.
template <typename T>
std::uint64_t batch_checksum(const MiniBatch<T>& mb) {
  std::uint64_t h = fnv1a_bytes(&mb.id, sizeof(mb.id));
  h = checksum(mb.x, h);
  return fnv1a_bytes(mb.y.data(), mb.y.size() * sizeof(int), h);
}

}  // namespace hardbatch
