#pragma once

namespace mdtk::specfun {

// 1 - Phi(x) via the complementary error function.
double normal_tail(double x);

// log(1 - Phi(x)) for any x; switches to the asymptotic Mills-ratio series
// where erfc underflows.
double log_normal_tail(double x);

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
// Series / continued-fraction split as in Numerical Recipes; the log
// prefactor is evaluated with a Stirling-difference form so that absolute
// accuracy holds up to a ~ 1e12.
double gammp(double a, double x);
double gammq(double a, double x);

// log P(Y = k) for Y ~ Poisson(lambda).
double poisson_log_pmf(double k, double lambda);

// Survival function of the chi-square distribution with k degrees of freedom.
double chi_square_sf(double statistic, double dof);

}  // namespace mdtk::specfun
