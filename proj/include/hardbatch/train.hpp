#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hardbatch/autodiff.hpp"
#include "hardbatch/batching.hpp"
#include "hardbatch/errors.hpp"
#include "hardbatch/ledger.hpp"
#include "hardbatch/metrics.hpp"
#include "hardbatch/network.hpp"
#include "hardbatch/optimizer.hpp"
#include "hardbatch/schedule.hpp"

namespace hardbatch {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 512;
  double delta = 1.0;
  double learning_rate = 0.005;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  bool eval_every_round = false;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (!(delta > 0.0) || delta > 1.0) throw ConfigError("delta must be in (0,1]");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  }
};

struct RunState {
  std::int64_t backprop_count = 0;
  int round_index = 0;
  std::int64_t zeta = 0;
  int selection_size = 0;
};

// Test metrics taken at the start of a selection round, before the ledger is
// sorted; only produced under eval_every_round.
struct RoundEval {
  int round_index = 0;
  std::int64_t backprop_count = 0;
  double test_loss = 0.0;
  double test_top1 = 0.0;
};

// Collector for everything a run emits: the checkpoint record stream plus
// selection/ledger instrumentation for the proposed loop.
struct RunLog {
  std::vector<MetricsRecord> records;
  std::vector<std::vector<int>> round_selections;  // selected ids, per round
  std::vector<RoundEval> round_evals;
  LossLedger final_ledger;  // empty for the traditional loop
  double train_seconds = 0.0;
  double sort_seconds = 0.0;

  // When set, the ledger is snapshotted at the start of every round (and once
  // after the last); lets tests verify stale entries bit-exactly.
  bool capture_round_ledgers = false;
  std::vector<std::vector<LedgerEntry>> round_ledgers;
};

namespace detail {

using TrainClock = std::chrono::steady_clock;

inline double seconds_since(TrainClock::time_point start) {
  return std::chrono::duration<double>(TrainClock::now() - start).count();
}

// Emits one MetricsRecord each time the back-prop count crosses a multiple of
// N. Both train and test metrics are evaluated on the spot (forward passes
// over all N train and M test batches with frozen weights), so records from
// the two training loops measure the same network quantity at equal budgets.
template <typename T>
class CheckpointTracker {
 public:
  CheckpointTracker(const BatchPlan<T>& plan, RunLog& log)
      : n_(plan.num_train_batches()), plan_(plan), log_(log),
        start_(TrainClock::now()) {}

  void on_update(const MLPNetwork<T>& net, std::int64_t backprop_count,
                 std::optional<int> round_index) {
    if (backprop_count < next_multiple_ * n_) return;

    MetricsRecord rec;
    rec.backprop_count = backprop_count;
    rec.epoch_equivalent = static_cast<double>(backprop_count) / static_cast<double>(n_);
    rec.wall_seconds = seconds_since(start_);
    const EvalResult train_ev = evaluate(net, plan_.train_batches);
    rec.train_loss = train_ev.loss;
    rec.train_top1 = train_ev.top1;
    const EvalResult test_ev = evaluate(net, plan_.test_batches);
    rec.test_loss = test_ev.loss;
    rec.test_top1 = test_ev.top1;
    rec.round_index = round_index;
    log_.records.push_back(rec);
    ++next_multiple_;
  }

  void finish() { log_.train_seconds = seconds_since(start_); }

 private:
  std::int64_t n_;
  const BatchPlan<T>& plan_;
  RunLog& log_;
  TrainClock::time_point start_;
  std::int64_t next_multiple_ = 1;
};

// One forward/backward/update on a single batch.
template <typename T>
double train_step(MLPNetwork<T>& net, OptimizerState<T>& opt, const MiniBatch<T>& batch,
                  RunState& state, CheckpointTracker<T>& tracker,
                  std::optional<int> round_index) {
  auto result = backward(net, batch.x, batch.y);
  if (!std::isfinite(result.loss)) {
    throw DivergenceError("non-finite training loss on batch " +
                              std::to_string(batch.id) + " after " +
                              std::to_string(state.backprop_count) + " back-props",
                          state.backprop_count, batch.id);
  }
  sgd_momentum_step(net, result.grads, opt);
  ++state.backprop_count;
  tracker.on_update(net, state.backprop_count, round_index);
  return result.loss;
}

}  // namespace detail

// The standard epoch loop: every epoch back-propagates all N train batches in
// fixed id order, then the checkpoint evaluates the M test batches. Total
// back-props: N * E.
template <typename T>
RunState train_traditional(MLPNetwork<T>& net, const BatchPlan<T>& plan,
                           const TrainConfig& config, RunLog& log) {
  config.validate();
  const int n = plan.num_train_batches();
  if (n < 1) throw ConfigError("batch plan has no training batches");

  RunState state;
  state.selection_size = n;
  OptimizerState<T> opt(net, config.learning_rate, config.momentum);
  detail::CheckpointTracker<T> tracker(plan, log);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& batch : plan.train_batches) {
      detail::train_step(net, opt, batch, state, tracker, std::nullopt);
    }
  }
  tracker.finish();
  return state;
}

// The loss-ranked loop: a warm-up pass over all N batches populates the
// ledger, then zeta rounds each sort the ledger by loss (descending, ties by
// ascending id), train the S hardest batches in that order and refresh only
// their entries. Unselected entries stay stale. Total back-props: N + zeta*S,
// which equals N * E whenever delta*N and (E-1)/delta are integral.
//
// delta = 1.0 is, by definition, the traditional method and dispatches there.
template <typename T>
RunState train_proposed(MLPNetwork<T>& net, const BatchPlan<T>& plan,
                        const TrainConfig& config, RunLog& log) {
  config.validate();
  if (config.delta == 1.0) return train_traditional(net, plan, config, log);

  const int n = plan.num_train_batches();
  if (n < 1) throw ConfigError("batch plan has no training batches");
  const Schedule schedule = compute_schedule(config.epochs, config.delta, n);

  RunState state;
  state.zeta = schedule.zeta;
  state.selection_size = schedule.selection_size;
  OptimizerState<T> opt(net, config.learning_rate, config.momentum);
  detail::CheckpointTracker<T> tracker(plan, log);
  LossLedger ledger(n);

  // Warm-up: one full pass, recording every batch's pre-update loss.
  for (const auto& batch : plan.train_batches) {
    const double loss = detail::train_step(net, opt, batch, state, tracker, std::nullopt);
    ledger.update(batch.id, loss, state.backprop_count);
  }

  for (std::int64_t z = 0; z < schedule.zeta; ++z) {
    state.round_index = static_cast<int>(z);
    if (config.eval_every_round) {
      const EvalResult ev = evaluate(net, plan.test_batches);
      log.round_evals.push_back(
          {static_cast<int>(z), state.backprop_count, ev.loss, ev.top1});
    }
    if (log.capture_round_ledgers) log.round_ledgers.push_back(ledger.entries());

    const auto sort_start = detail::TrainClock::now();
    const std::vector<int> selected = select_hard_batches(ledger, schedule.selection_size);
    log.sort_seconds += detail::seconds_since(sort_start);
    log.round_selections.push_back(selected);

    for (int id : selected) {
      const auto& batch = plan.train_batches[static_cast<std::size_t>(id)];
      const double loss =
          detail::train_step(net, opt, batch, state, tracker, static_cast<int>(z));
      ledger.update(id, loss, state.backprop_count);
    }
  }
  if (log.capture_round_ledgers) log.round_ledgers.push_back(ledger.entries());
  tracker.finish();
  log.final_ledger = std::move(ledger);
  return state;
}

}  // namespace hardbatch
