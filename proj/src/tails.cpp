#include "mdtk/tails.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "mdtk/common.hpp"
#include "mdtk/specfun.hpp"

namespace mdtk::tails {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;

// Snap t to the Poisson lattice when within rounding noise so that ties
// resolve by excluding the atom, matching the strict inequality in P(W > x).
double snap_to_lattice(double t) {
  const double r = std::round(t);
  return (std::abs(t - r) <= 1e-9) ? r : t;
}

double checked_lambda(double gamma) {
  if (gamma == 0.0) {
    throw Error::domain("Z_gamma is undefined at gamma = 0; normal_tail is the limit");
  }
  const double lam = 1.0 / (gamma * gamma);
  if (!std::isfinite(lam)) throw Error::domain("lambda = 1/gamma^2 overflows");
  return lam;
}

}  // namespace

double normal_tail(double x) { return specfun::normal_tail(x); }

double log_normal_tail(double x) { return specfun::log_normal_tail(x); }

double skew_corrected_tail(double x, double gamma) {
  if (gamma == 0.0) return normal_tail(x);
  return std::exp(log_skew_corrected_tail(x, gamma));
}

double log_skew_corrected_tail(double x, double gamma) {
  return specfun::log_normal_tail(x) + gamma * x * x * x / 6.0;
}

double standardized_poisson_tail(double x, double gamma) {
  const double lam = checked_lambda(gamma);
  const double t = snap_to_lattice(lam + x / gamma);
  if (gamma > 0.0) {
    // Z > x  <=>  Y >= floor(t) + 1
    const double k = std::floor(t) + 1.0;
    if (k <= 0.0) return 1.0;
    return specfun::gammp(k, lam);
  }
  // Z > x  <=>  Y <= ceil(t) - 1
  const double j = std::ceil(t) - 1.0;
  if (j < 0.0) return 0.0;
  return specfun::gammq(j + 1.0, lam);
}

double cramer_diagnostic(double x, double gamma) {
  if (gamma == 0.0 || std::abs(gamma) > 1.0) {
    throw Error::domain("cramer_diagnostic needs 0 < |gamma| <= 1");
  }
  const double x_max = 1.0 / std::sqrt(std::abs(gamma));
  if (x < 0.0 || x > x_max) {
    throw Error::range("x outside the Cramér-expansion range [0, |gamma|^{-1/2}]");
  }
  return standardized_poisson_tail(x, gamma) / skew_corrected_tail(x, gamma) - 1.0;
}

PointApprox poisson_point_approx(double w0, double gamma) {
  const double lam = checked_lambda(gamma);
  const double kr = w0 / gamma + lam;
  const double k = std::round(kr);
  // Distance to the lattice in w-space is |gamma| * |kr - k|.
  if (std::abs(kr - k) > 1e-9) {
    throw Error::domain("w0 is not a lattice point of Z_gamma");
  }
  PointApprox out;
  out.exact = (k < 0.0) ? 0.0 : std::exp(specfun::poisson_log_pmf(k, lam));
  out.approx = std::abs(gamma) / kSqrt2Pi * std::exp(-0.5 * w0 * w0 + gamma * w0 * w0 * w0 / 6.0);
  return out;
}

BoundReport theorem1_bound(const StructuralParams& params, double x, double c, double c0) {
  if (params.m == 0 || params.n == 0 || params.s == 0 || params.d == 0 ||
      !(params.delta > 0.0)) {
    throw Error::domain("theorem1_bound needs positive (m, n, s, d, delta)");
  }
  if (!(c > 0.0) || !(c0 > 0.0)) throw Error::domain("constants C, C0 must be positive");
  const double s = static_cast<double>(params.s);
  const double d = static_cast<double>(params.d);
  const double core = static_cast<double>(params.m) * static_cast<double>(params.n) *
                      (s * s * s * s) * (d * d * d * d) * std::pow(params.delta, 5);
  BoundReport report;
  report.bound_value = c * core * (1.0 + x * x);
  report.x_max = c0 / std::sqrt(core);
  report.x = x;
  report.x_in_range = (x >= 0.0 && x <= report.x_max);
  report.c = c;
  report.c0 = c0;
  report.params = params;
  return report;
}

void PatternGraph::validate() const {
  if (num_vertices < 2) throw Error::invalid_model("pattern graph needs >= 2 vertices");
  if (edges.empty()) throw Error::invalid_model("pattern graph needs >= 1 edge");
  std::vector<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a == b) throw Error::invalid_model("pattern graph must be simple (no loops)");
    if (a < 0 || b < 0 || a >= num_vertices || b >= num_vertices) {
      throw Error::invalid_model("pattern edge endpoint out of range");
    }
    const std::pair<int, int> key = std::minmax(a, b);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw Error::invalid_model("pattern graph must be simple (duplicate edge)");
    }
    seen.push_back(key);
  }
}

PatternGraph pattern_edge() { return {2, {{0, 1}}}; }

PatternGraph pattern_triangle() { return {3, {{0, 1}, {1, 2}, {0, 2}}}; }

PatternGraph pattern_path(int length) {
  if (length < 1) throw Error::invalid_model("path length must be >= 1");
  PatternGraph g;
  g.num_vertices = length + 1;
  for (int i = 0; i < length; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

double subgraph_psi(double num_graph_vertices, double p, const PatternGraph& pattern) {
  pattern.validate();
  if (pattern.num_vertices > 8) {
    throw Error::unsupported_size("subgraph_psi supports patterns with v(G) <= 8");
  }
  if (!(p > 0.0 && p < 1.0)) throw Error::domain("p must be in (0,1)");
  if (!(num_graph_vertices > 0.0)) throw Error::domain("N must be positive");

  const int e = pattern.num_edges();
  std::vector<uint32_t> edge_cover(static_cast<size_t>(e));
  for (int i = 0; i < e; ++i) {
    edge_cover[static_cast<size_t>(i)] = (uint32_t{1} << pattern.edges[static_cast<size_t>(i)].first) |
                                         (uint32_t{1} << pattern.edges[static_cast<size_t>(i)].second);
  }

  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](int covered_vertices, int edge_count) {
    const double val = std::pow(num_graph_vertices, covered_vertices) * std::pow(p, edge_count);
    best = std::min(best, val);
  };

  if (e <= 22) {
    for (uint32_t sub = 1; sub < (uint32_t{1} << e); ++sub) {
      uint32_t cover = 0;
      for (uint32_t rest = sub; rest != 0; rest &= rest - 1) {
        cover |= edge_cover[static_cast<size_t>(std::countr_zero(rest))];
      }
      consider(std::popcount(cover), std::popcount(sub));
    }
  } else {
    // With p < 1 the minimum over edge subsets is attained at a subset closed
    // within its vertex cover, so scanning vertex subsets is exhaustive.
    for (uint32_t vs = 1; vs < (uint32_t{1} << pattern.num_vertices); ++vs) {
      int edge_count = 0;
      uint32_t cover = 0;
      for (int i = 0; i < e; ++i) {
        if ((edge_cover[static_cast<size_t>(i)] & ~vs) == 0) {
          ++edge_count;
          cover |= edge_cover[static_cast<size_t>(i)];
        }
      }
      if (edge_count == 0) continue;
      consider(std::popcount(cover), edge_count);
    }
  }
  return best;
}

double subgraph_range(double num_graph_vertices, double p, const PatternGraph& pattern,
                      double c0) {
  if (!(c0 > 0.0)) throw Error::domain("C0 must be positive");
  const double psi = subgraph_psi(num_graph_vertices, p, pattern);
  const double e = static_cast<double>(pattern.num_edges());
  const double log_val = 6.0 * std::log(num_graph_vertices) + 2.5 * std::log1p(-p) +
                         5.0 * e * std::log(p) - 2.5 * std::log(psi);
  return c0 * std::exp(0.5 * log_val);
}

}  // namespace mdtk::tails
