#pragma once

// Umbrella header for the hardbatch mini-batch training engine.

#include "hardbatch/autodiff.hpp"
#include "hardbatch/batching.hpp"
#include "hardbatch/dataset.hpp"
#include "hardbatch/errors.hpp"
#include "hardbatch/experiment.hpp"
#include "hardbatch/ledger.hpp"
#include "hardbatch/loss.hpp"
#include "hardbatch/metrics.hpp"
#include "hardbatch/network.hpp"
#include "hardbatch/optimizer.hpp"
#include "hardbatch/report.hpp"
#include "hardbatch/rng.hpp"
#include "hardbatch/schedule.hpp"
#include "hardbatch/tensor.hpp"
#include "hardbatch/train.hpp"
