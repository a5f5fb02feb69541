#pragma once

#include <vector>

#include "mdtk/model.hpp"

namespace mdtk::oracle {

// Full distribution of W over every base configuration; atoms merged when
// within 1e-12 of each other and sorted strictly increasing.
struct ExactDistribution {
  std::vector<double> values;
  std::vector<double> probs;
  double total_prob = 0.0;
};

// Enumerate all base configurations (capped at 2^24). Probabilities are
// products in log space, accumulated with compensation.
ExactDistribution exact_distribution(const LocalStatisticModel& model);

enum class Side { right, left };

// P(W > x) (right) or P(W < -x) (left); strict inequalities.
double exact_tail(const ExactDistribution& dist, double x, Side side);

struct Moments4 {
  double mean = 0.0;
  double var = 0.0;
  double third = 0.0;   // central
  double fourth = 0.0;  // central
};

Moments4 exact_moments(const ExactDistribution& dist);

}  // namespace mdtk::oracle
