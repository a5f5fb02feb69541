#pragma once

#include <cstdint>

#include "mdtk/model.hpp"

namespace mdtk {

struct RandomModelOptions {
  int max_m = 10;
  int max_n = 8;
  int max_s = 3;
};

// Small random model with Bernoulli bases, random index sets and a centered
// table summand; deterministic in (seed, index). Used by the oracle
// cross-validation suite and by randomized property tests.
LocalStatisticModel random_tiny_model(uint64_t seed, uint64_t index,
                                      const RandomModelOptions& options = {});

}  // namespace mdtk
