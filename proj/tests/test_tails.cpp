#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "mdtk/common.hpp"
#include "mdtk/rng.hpp"
#include "mdtk/specfun.hpp"
#include "mdtk/tails.hpp"

using namespace mdtk;
using namespace mdtk::tails;

TEST_CASE("skew corrected tail") {
  // gamma = 0 reduces to the normal tail on the identical code path.
  for (double x : {0.0, 0.5, 2.0, 7.5}) {
    CHECK(skew_corrected_tail(x, 0.0) == normal_tail(x));
  }
  // x = 0 kills the correction for any gamma.
  for (double g : {-0.8, -0.1, 0.2, 1.5}) {
    CHECK(skew_corrected_tail(0.0, g) == doctest::Approx(0.5).epsilon(1e-15));
  }
  // Frozen high-precision value of (1-Phi(2)) e^{0.138*8/6}.
  CHECK(skew_corrected_tail(2.0, 0.138) ==
        doctest::Approx(0.02734601857924009405238).epsilon(1e-13));
  // Log route agrees with the linear route.
  CHECK(std::exp(log_skew_corrected_tail(3.0, 0.2)) ==
        doctest::Approx(skew_corrected_tail(3.0, 0.2)).epsilon(1e-14));
  // Deep tail stays finite in log space where the linear value underflows.
  CHECK(std::isfinite(log_skew_corrected_tail(60.0, -0.01)));
}

TEST_CASE("standardized poisson tail: analytic lattice cases") {
  // gamma=1: Z = Y-1, Y ~ Poi(1). P(Z>0) = P(Y>=2) = 1 - 2/e.
  CHECK(standardized_poisson_tail(0.0, 1.0) ==
        doctest::Approx(1.0 - 2.0 * std::exp(-1.0)).epsilon(1e-12));
  // Just above the atom at -1: P(Z > -1+), and boundary consistency at the atom.
  CHECK(standardized_poisson_tail(-0.999999999, 1.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-9));
  CHECK(standardized_poisson_tail(-1.0, 1.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));  // atom excluded
  // Below the whole support start.
  CHECK(standardized_poisson_tail(-1.5, 1.0) == 1.0);
  // gamma=-1: P(Z>0) = P(Y=0) = 1/e.
  CHECK(standardized_poisson_tail(0.0, -1.0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK_THROWS_AS((void)standardized_poisson_tail(1.0, 0.0), Error);
  CHECK_THROWS_AS((void)standardized_poisson_tail(1.0, 1e-200), Error);
}

TEST_CASE("standardized poisson tail: frozen references") {
  struct Ref {
    double x, gamma, value;
  };
  const Ref refs[] = {
      {1.0, 0.138, 0.1667995695224122575468},
      {2.0, 0.138, 0.02262075765219622839773},
      {2.0, -0.138, 0.02240824313544551880973},
      {0.5, 0.05, 0.2976998384586426480545},
      {3.0, 0.5, 0.002839766120513743051055},
  };
  for (const auto& r : refs) {
    CHECK(std::abs(standardized_poisson_tail(r.x, r.gamma) - r.value) < 1e-12);
  }
}

TEST_CASE("standardized poisson tail is a right-continuous non-increasing step function") {
  const double gamma = 0.3;
  double prev = 2.0;
  for (double x = -3.0; x <= 3.0; x += 0.05) {
    const double v = standardized_poisson_tail(x, gamma);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v <= prev + 1e-15);
    prev = v;
    // Right continuity: no jump immediately to the right.
    CHECK(standardized_poisson_tail(x + 1e-13, gamma) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("Z_gamma matches the first three moments of W") {
  for (double gamma : {0.05, -0.05, 0.138, -0.138, 0.5, -0.5}) {
    const double lam = 1.0 / (gamma * gamma);
    const double lo = std::max(0.0, lam - 60.0 * std::sqrt(lam) - 60.0);
    const double hi = lam + 60.0 * std::sqrt(lam) + 60.0;
    Kahan mass, mean, var, third;
    for (double k = lo; k <= hi; ++k) {
      const double p = std::exp(specfun::poisson_log_pmf(k, lam));
      const double z = gamma * (k - lam);
      mass.add(p);
      mean.add(p * z);
      var.add(p * z * z);
      third.add(p * z * z * z);
    }
    CHECK(std::abs(mass.value() - 1.0) < 1e-9);
    CHECK(std::abs(mean.value()) < 1e-9);
    CHECK(std::abs(var.value() - 1.0) < 1e-9);
    CHECK(std::abs(third.value() - gamma) < 1e-9);
  }
}

TEST_CASE("gamma -> 0 recovers the normal tail") {
  for (double x = 0.0; x <= 3.0; x += 0.25) {
    CHECK(std::abs(standardized_poisson_tail(x, 1e-3) - normal_tail(x)) < 5e-3);
  }
}

TEST_CASE("monotonicity of the continuous approximations") {
  double prev = 1.0;
  for (double x = 0.0; x <= 3.0; x += 0.1) {
    const double v = normal_tail(x);
    if (x > 0.0) CHECK(v < prev);
    prev = v;
  }
  for (double gamma : {-0.2, -0.05, 0.05, 0.2}) {
    prev = 1.0;
    for (double x = 0.0; x <= 3.0; x += 0.1) {
      const double v = skew_corrected_tail(x, gamma);
      if (x > 0.0) CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("cramer diagnostic") {
  CHECK(std::abs(cramer_diagnostic(0.0, 0.01)) <= 0.05);
  CHECK(std::isfinite(cramer_diagnostic(2.0, 0.138)));
  // Vanishes as |gamma| -> 0 at fixed x.
  const double d2 = std::abs(cramer_diagnostic(1.0, 1e-2));
  const double d3 = std::abs(cramer_diagnostic(1.0, 1e-3));
  const double d4 = std::abs(cramer_diagnostic(1.0, 1e-4));
  CHECK(d2 > d3);
  CHECK(d3 > d4);
  // Range preconditions.
  CHECK_THROWS_AS((void)cramer_diagnostic(-0.1, 0.01), Error);
  CHECK_THROWS_AS((void)cramer_diagnostic(11.0, 0.01), Error);  // > gamma^{-1/2}
  CHECK_THROWS_AS((void)cramer_diagnostic(1.0, 0.0), Error);
  CHECK_THROWS_AS((void)cramer_diagnostic(1.0, 1.5), Error);
}

TEST_CASE("poisson point approximation") {
  {
    // gamma=1, w0=-1 is the Y=0 atom: exact pmf e^{-1}.
    const auto pa = poisson_point_approx(-1.0, 1.0);
    CHECK(pa.exact == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  {
    // gamma=0.5: lambda=4, w0=0 is the Y=4 atom.
    const auto pa = poisson_point_approx(0.0, 0.5);
    CHECK(pa.exact == doctest::Approx(0.1953668148131645897997).epsilon(1e-12));
  }
  {
    // gamma=0.1: lambda=100, w0=0 on-lattice; exact vs approx within e^{O(1)}.
    const auto pa = poisson_point_approx(0.0, 0.1);
    CHECK(pa.exact > 0.0);
    const double ratio = pa.exact / pa.approx;
    CHECK(ratio > std::exp(-1.0));
    CHECK(ratio < std::exp(1.0));
  }
  CHECK_THROWS_AS((void)poisson_point_approx(0.05, 0.1), Error);  // off-lattice
  CHECK_THROWS_AS((void)poisson_point_approx(0.0, 0.0), Error);
}

TEST_CASE("theorem-1 bound and range") {
  // i.i.d. parameterization (n, n, 1, 1, 1/sqrt(n)): x_max = n^{1/4} exactly
  // for power-of-two-friendly n.
  for (uint64_t n : {16ull, 256ull, 4096ull}) {
    const StructuralParams params{n, n, 1, 1, 1.0 / std::sqrt(static_cast<double>(n))};
    const auto report = theorem1_bound(params, 0.0, 1.0, 1.0);
    CHECK(report.x_max == std::pow(static_cast<double>(n), 0.25));
  }
  {
    const StructuralParams params{1500, 1500, 1, 1, 1.0 / std::sqrt(1500.0)};
    CHECK(theorem1_bound(params, 0.0, 1.0, 1.0).x_max ==
          doctest::Approx(std::pow(1500.0, 0.25)).epsilon(1e-12));
  }
  {
    // k-runs parameterization: x_max = C0 (sigma^5 / (n^2 k^8))^{1/2}.
    const uint64_t n = 1500;
    const double sigma = std::sqrt(123.046875);
    const StructuralParams params{n, n, 2, 2, 1.0 / sigma};
    const auto report = theorem1_bound(params, 1.0, 1.0, 2.0);
    const double closed =
        2.0 * std::sqrt(std::pow(sigma, 5) / (1500.0 * 1500.0 * 256.0));
    CHECK(report.x_max == doctest::Approx(closed).epsilon(1e-12));
    CHECK(report.bound_value ==
          doctest::Approx(1500.0 * 1500.0 * 16.0 * 16.0 * std::pow(sigma, -5) * 2.0)
              .epsilon(1e-12));
  }
  {
    // x = 0: bound reduces to C m n s^4 d^4 delta^5.
    const StructuralParams params{10, 20, 2, 3, 0.5};
    const auto report = theorem1_bound(params, 0.0, 2.5, 1.0);
    CHECK(report.bound_value ==
          doctest::Approx(2.5 * 20.0 * 10.0 * 16.0 * 81.0 * std::pow(0.5, 5))
              .epsilon(1e-14));
    CHECK(report.x_in_range);
  }
  // Monotone in every parameter and in x.
  const StructuralParams base{10, 10, 2, 2, 0.3};
  const double b0 = theorem1_bound(base, 1.0, 1.0, 1.0).bound_value;
  CHECK(theorem1_bound({11, 10, 2, 2, 0.3}, 1.0, 1.0, 1.0).bound_value > b0);
  CHECK(theorem1_bound({10, 11, 2, 2, 0.3}, 1.0, 1.0, 1.0).bound_value > b0);
  CHECK(theorem1_bound({10, 10, 3, 2, 0.3}, 1.0, 1.0, 1.0).bound_value > b0);
  CHECK(theorem1_bound({10, 10, 2, 3, 0.3}, 1.0, 1.0, 1.0).bound_value > b0);
  CHECK(theorem1_bound({10, 10, 2, 2, 0.4}, 1.0, 1.0, 1.0).bound_value > b0);
  CHECK(theorem1_bound(base, 1.5, 1.0, 1.0).bound_value > b0);
  CHECK_THROWS_AS((void)theorem1_bound({0, 1, 1, 1, 0.1}, 0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS((void)theorem1_bound({1, 1, 1, 1, -0.1}, 0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS((void)theorem1_bound(base, 0.0, 0.0, 1.0), Error);
}

TEST_CASE("subgraph psi") {
  // Triangle: psi = min(N^2 p, N^3 p^2, N^3 p^3) over 20 random (N, p).
  RepDraws draws(31, 0);
  const auto triangle = pattern_triangle();
  for (int t = 0; t < 20; ++t) {
    const double n_vertices = 3.0 + std::floor(draws.next_unit() * 500.0);
    const double p = 0.05 + 0.9 * draws.next_unit();
    const double expected = std::min({n_vertices * n_vertices * p,
                                      std::pow(n_vertices, 3) * p * p,
                                      std::pow(n_vertices, 3) * p * p * p});
    CHECK(subgraph_psi(n_vertices, p, triangle) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
  // Single edge: only one subgraph.
  CHECK(subgraph_psi(50.0, 0.3, pattern_edge()) == doctest::Approx(2500.0 * 0.3));
  // Fixed p, growing N: the single edge dominates eventually.
  CHECK(subgraph_psi(1e6, 0.5, triangle) == doctest::Approx(1e12 * 0.5));
  CHECK_THROWS_AS((void)subgraph_psi(10.0, 0.5, PatternGraph{9, {{0, 1}}}), Error);
  CHECK_THROWS_AS((void)subgraph_psi(10.0, 1.0, triangle), Error);
}

TEST_CASE("subgraph psi via the vertex-support route (dense pattern)") {
  // K8 has 28 edges, beyond the direct edge-subset scan. The minimum over
  // subgraphs of a complete pattern is attained at complete subgraphs.
  PatternGraph k8;
  k8.num_vertices = 8;
  for (int a = 0; a < 8; ++a) {
    for (int b = a + 1; b < 8; ++b) k8.edges.emplace_back(a, b);
  }
  for (const auto& [n_vertices, p] : std::vector<std::pair<double, double>>{
           {100.0, 0.3}, {10.0, 0.9}, {1e4, 0.05}}) {
    double expected = std::numeric_limits<double>::infinity();
    for (int t = 2; t <= 8; ++t) {
      expected = std::min(expected, std::pow(n_vertices, t) *
                                        std::pow(p, t * (t - 1) / 2));
    }
    CHECK(subgraph_psi(n_vertices, p, k8) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("subgraph range endpoint") {
  const auto triangle = pattern_triangle();
  // Ratio at (4N vs N) is exactly 2 once psi = N^2 p (fixed p, large N).
  const double r1 = subgraph_range(1000.0, 0.5, triangle, 1.0);
  const double r2 = subgraph_range(4000.0, 0.5, triangle, 1.0);
  CHECK(r2 / r1 == doctest::Approx(2.0).epsilon(1e-9));
  // p -> 1 kills the endpoint through the (1-p) factor.
  CHECK(subgraph_range(100.0, 1.0 - 1e-9, triangle, 1.0) < 1e-5);
  // Single edge closed form.
  const double n_vertices = 30.0, p = 0.4;
  const double psi = n_vertices * n_vertices * p;
  const double closed = std::sqrt(std::pow(n_vertices, 6) * std::pow(1.0 - p, 2.5) *
                                  std::pow(p, 5) / std::pow(psi, 2.5));
  CHECK(subgraph_range(n_vertices, p, pattern_edge(), 1.0) ==
        doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("pattern helpers") {
  CHECK(pattern_path(3).num_vertices == 4);
  CHECK(pattern_path(3).num_edges() == 3);
  CHECK_THROWS_AS((void)pattern_path(0), Error);
  PatternGraph loop{2, {{0, 0}}};
  CHECK_THROWS_AS(loop.validate(), Error);
  PatternGraph dup{3, {{0, 1}, {1, 0}}};
  CHECK_THROWS_AS(dup.validate(), Error);
}
