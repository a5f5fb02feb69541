#pragma once

#include <memory>
#include <optional>
#include <string>

#include "mdtk/model.hpp"
#include "mdtk/moments.hpp"
#include "mdtk/tails.hpp"

namespace mdtk::apps {

struct KRunsSpec {
  uint64_t n = 0;
  int k = 0;  // run length, 1 < k < n
  double p = 0.0;
};

enum class UStatBase { rademacher, bernoulli, centered_bernoulli };

struct UStatSpec {
  int m = 0;  // sample size
  int s = 2;  // kernel order
  std::string kernel = "product";
  UStatBase base = UStatBase::rademacher;
  double p = 0.5;             // parameter for the bernoulli bases
  std::optional<double> c1;   // asserted a.s. kernel bound; computed if absent
  bool allow_degenerate = false;
};

struct SubgraphSpec {
  int num_vertices = 0;  // N
  double p = 0.0;
  tails::PatternGraph pattern;
};

enum class SigmaMethod { analytic, exact_enumeration, monte_carlo };

// Monte Carlo settings used only when sigma^2 has no analytic or feasible
// exact route.
struct McOptions {
  uint64_t reps = 200000;
  uint64_t seed = 1;
  int lanes = 1;
};

struct BuiltModel {
  // Null when only the direct sampler is feasible (system too large for the
  // generic-model path).
  std::shared_ptr<const LocalStatisticModel> model;
  Sampler direct;  // consumes exactly params.m uniforms per rep
  double sigma2_raw = 0.0;
  SigmaMethod sigma_method = SigmaMethod::analytic;
  std::optional<double> sigma2_se;
  std::optional<double> gamma_analytic;  // closed form, when the family has one
  StructuralParams params;
  std::string name;
};

BuiltModel build_kruns(const KRunsSpec& spec, const McOptions& sigma_mc = {});
BuiltModel build_ustat(const UStatSpec& spec, const McOptions& sigma_mc = {});
BuiltModel build_subgraph(const SubgraphSpec& spec, const McOptions& sigma_mc = {});

// Standardized i.i.d. sum: xi_i = (X_i - EX) / sqrt(n Var X).
BuiltModel iid_model(uint64_t n, const BaseVariableSpec& base);

}  // namespace mdtk::apps
