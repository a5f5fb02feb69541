#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mdtk/model.hpp"

namespace mdtk::tails {

// 1 - Phi(x); relative accuracy ~1e-15 for |x| <= 8.
double normal_tail(double x);
// log(1 - Phi(x)); valid far beyond erfc underflow.
double log_normal_tail(double x);

// (1 - Phi(x)) e^{gamma x^3 / 6}. Computed in log space; gamma = 0 falls
// through to normal_tail on the identical code path. The value is an
// approximation target and may exceed 1.
double skew_corrected_tail(double x, double gamma);
double log_skew_corrected_tail(double x, double gamma);

// P(Z_gamma > x) with Z_gamma = gamma (Y - 1/gamma^2), Y ~ Poisson(1/gamma^2).
// Strict inequality: x on a lattice atom excludes the atom.
double standardized_poisson_tail(double x, double gamma);

// P(Z_gamma > x) / ((1 - Phi(x)) e^{gamma x^3/6}) - 1 on the Cramér-expansion
// range 0 <= x <= |gamma|^{-1/2}, |gamma| <= 1.
double cramer_diagnostic(double x, double gamma);

struct PointApprox {
  double exact;   // P(Z_gamma = w0)
  double approx;  // (|gamma|/sqrt(2 pi)) exp(-w0^2/2 + gamma w0^3/6)
};
// Diagnostic pair at a lattice point w0 of Z_gamma.
PointApprox poisson_point_approx(double w0, double gamma);

struct BoundReport {
  double bound_value = 0.0;  // C m n s^4 d^4 delta^5 (1 + x^2)
  double x_max = 0.0;        // C0 (m n s^4 d^4 delta^5)^{-1/2}
  double x = 0.0;
  bool x_in_range = false;
  double c = 1.0;   // user-supplied, not derived from the theory
  double c0 = 1.0;  // user-supplied, not derived from the theory
  StructuralParams params;
};

BoundReport theorem1_bound(const StructuralParams& params, double x, double c, double c0);

// Fixed pattern graph for subgraph counts, 0-indexed vertices.
struct PatternGraph {
  int num_vertices = 0;
  std::vector<std::pair<int, int>> edges;

  int num_edges() const noexcept { return static_cast<int>(edges.size()); }
  void validate() const;  // simple graph, endpoints in range
};

PatternGraph pattern_edge();
PatternGraph pattern_triangle();
PatternGraph pattern_path(int length);  // path with `length` edges

// psi = min over subgraphs H of G with e(H) >= 1 of N^{v(H)} p^{e(H)},
// where v(H) counts covered vertices.
double subgraph_psi(double num_graph_vertices, double p, const PatternGraph& pattern);

// Range endpoint C0 [N^6 (1-p)^{5/2} p^{5e} / psi^{5/2}]^{1/2}.
double subgraph_range(double num_graph_vertices, double p, const PatternGraph& pattern,
                      double c0);

}  // namespace mdtk::tails
