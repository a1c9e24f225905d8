#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "hardbatch/errors.hpp"

namespace hardbatch {

struct Schedule {
  int selection_size = 0;   // S: batches trained per round
  std::int64_t zeta = 0;    // number of selection rounds
};

// S = max(1, round(delta * N)); zeta = round((E-1) * N / S). When delta*N and
// (E-1)/delta are integral this is exactly zeta = (E-1)/delta and the total
// back-prop count N + zeta*S equals E*N; otherwise the deviation is below S.
inline Schedule compute_schedule(int epochs, double delta, int num_train_batches) {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(delta > 0.0) || delta > 1.0) throw ConfigError("delta must be in (0,1]");
  if (num_train_batches < 1) throw ConfigError("need at least one training batch");

  Schedule s;
  const double n = static_cast<double>(num_train_batches);
  s.selection_size = static_cast<int>(
      std::max<long long>(1, std::llround(delta * n)));
  s.zeta = std::llround(static_cast<double>(epochs - 1) * n /
                        static_cast<double>(s.selection_size));
  return s;
}

}  // namespace hardbatch
