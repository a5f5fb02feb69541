#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "mdtk/model.hpp"

namespace mdtk::moments {

enum class Method { exact_enumeration, analytic, monte_carlo };

struct MomentSummary {
  double sigma2 = 0.0;  // pre-normalization variance when applicable
  double var_w = 0.0;   // variance of the model's W
  double gamma = 0.0;   // E W^3
  double mean = 0.0;
  Method method = Method::exact_enumeration;
  std::optional<double> se_var;
  std::optional<double> se_gamma;
};

// Var(W) = sum_i sum_{j in A_i} E xi_i xi_j, each expectation by exact
// enumeration of the joint support over I_i u I_j. Pairs outside A_i vanish
// by independence and centering.
double variance_exact(const LocalStatisticModel& model, const DependencyStructure& deps);

// E W^3 via the LD1-LD3 decomposition
//   2 sum_i sum_{j in A_i} sum_{k in A_ij} E xi_i xi_j xi_k
//   -  sum_i sum_{j in A_i} sum_{k in A_i}  E xi_i xi_j xi_k,
// verified against full enumeration by the oracle test suite.
double gamma_exact(const LocalStatisticModel& model, const DependencyStructure& deps);

// Circular 2-runs closed forms.
double kruns_sigma2_analytic(uint64_t n, double p);
double kruns_gamma_analytic(uint64_t n, double p);

// Plug-in moment estimates with standard errors from higher sample moments.
MomentSummary moments_mc(const Sampler& sampler, uint64_t reps, uint64_t seed, int lanes = 1);
MomentSummary moments_mc(const LocalStatisticModel& model, uint64_t reps, uint64_t seed,
                         int lanes = 1);

}  // namespace mdtk::moments
