#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "hardbatch/errors.hpp"

namespace hardbatch {

struct LedgerEntry {
  int batch_id = 0;
  double last_loss = -1.0;                  // < 0 until first recorded
  std::int64_t last_updated_backprop = -1;  // backprop count at last refresh
};

// The per-batch loss list driving hard-batch selection: one entry per train
// batch, holding the loss recorded at that batch's most recent
// back-propagation. Entries of unselected batches go stale on purpose.
class LossLedger {
 public:
  LossLedger() = default;
  explicit LossLedger(int num_batches) {
    entries_.resize(static_cast<std::size_t>(num_batches));
    for (int i = 0; i < num_batches; ++i) entries_[i].batch_id = i;
  }

  void update(int batch_id, double loss, std::int64_t backprop_count) {
    auto& e = entries_.at(static_cast<std::size_t>(batch_id));
    e.last_loss = loss;
    e.last_updated_backprop = backprop_count;
  }

  const LedgerEntry& entry(int batch_id) const {
    return entries_.at(static_cast<std::size_t>(batch_id));
  }

  bool fully_initialized() const {
    for (const auto& e : entries_) {
      if (e.last_updated_backprop < 0) return false;
    }
    return true;
  }

  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<LedgerEntry>& entries() const { return entries_; }

 private:
  std::vector<LedgerEntry> entries_;
};

// Ids of the S highest-loss entries in descending loss order; ties broken by
// ascending batch id (stable sort over the id-ordered ledger).
inline std::vector<int> select_hard_batches(const LossLedger& ledger, int selection_size) {
  const int n = ledger.size();
  if (selection_size < 1 || selection_size > n) {
    throw ConfigError("selection size " + std::to_string(selection_size) +
                      " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<const LedgerEntry*> order;
  order.reserve(static_cast<std::size_t>(n));
  for (const auto& e : ledger.entries()) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(),
                   [](const LedgerEntry* a, const LedgerEntry* b) {
                     return a->last_loss > b->last_loss;
                   });
  std::vector<int> selected(static_cast<std::size_t>(selection_size));
  for (int i = 0; i < selection_size; ++i) selected[static_cast<std::size_t>(i)] = order[static_cast<std::size_t>(i)]->batch_id;
  return selected;
}

}  // namespace hardbatch
