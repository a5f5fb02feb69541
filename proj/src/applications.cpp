#include "mdtk/applications.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mdtk/common.hpp"

namespace mdtk::apps {

namespace {

uint64_t binom_u64(uint64_t n, uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > static_cast<unsigned __int128>(4.0e18)) {
      throw Error::unsupported_size("binomial coefficient overflow");
    }
  }
  return static_cast<uint64_t>(r);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// --- k-runs ---------------------------------------------------------------

Sampler make_kruns_direct(uint64_t n, int k, double p, double offset, double scale) {
  const BaseVariableSpec base = BaseVariableSpec::bernoulli(p);
  return [n, k, base, offset, scale](RepDraws& draws) {
    static thread_local std::vector<uint8_t> bits;
    bits.resize(n);
    for (uint64_t a = 0; a < n; ++a) {
      bits[a] = static_cast<uint8_t>(base.draw_index(draws.next_unit()));
    }
    // Same term order and compensation as the generic model evaluation, so
    // both samplers agree exactly on identical draws.
    Kahan w;
    for (uint64_t i = 0; i < n; ++i) {
      bool all = true;
      for (int j = 0; j < k; ++j) {
        uint64_t idx = i + static_cast<uint64_t>(j);
        if (idx >= n) idx -= n;
        if (!bits[idx]) {
          all = false;
          break;
        }
      }
      w.add(((all ? 1.0 : 0.0) - offset) * scale);
    }
    return w.value();
  };
}

std::vector<std::vector<int>> kruns_index_sets(uint64_t n, int k) {
  std::vector<std::vector<int>> sets(n);
  for (uint64_t i = 0; i < n; ++i) {
    auto& is = sets[i];
    is.reserve(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) {
      is.push_back(static_cast<int>((i + static_cast<uint64_t>(j)) % n));
    }
  }
  return sets;
}

// --- U-statistics ---------------------------------------------------------

BaseVariableSpec ustat_base_spec(const UStatSpec& spec) {
  switch (spec.base) {
    case UStatBase::rademacher:
      return BaseVariableSpec::rademacher();
    case UStatBase::bernoulli:
      return BaseVariableSpec::bernoulli(spec.p);
    case UStatBase::centered_bernoulli:
      if (!(spec.p > 0.0 && spec.p < 1.0)) throw Error::invalid_model("p must be in (0,1)");
      return BaseVariableSpec::finite({{-spec.p, 1.0 - spec.p}, {1.0 - spec.p, spec.p}});
  }
  throw Error::invalid_model("unknown base kind");
}

double product_kernel(std::span<const double> values, double offset) {
  double prod = 1.0;
  for (double v : values) prod *= v;
  return prod - offset;
}

// Exhaustively verify kernel symmetry, centering, the a.s. bound, and the
// non-degeneracy condition E g^2(X_1) > 0 over the finite joint support.
struct KernelAudit {
  double sup_abs = 0.0;
  double e_g_squared = 0.0;
};

KernelAudit audit_product_kernel(const BaseVariableSpec& base, int s, double offset) {
  const int ss = base.support_size();
  std::vector<int> idx(static_cast<size_t>(s), 0);
  std::vector<double> vals(static_cast<size_t>(s));
  std::vector<double> perm(static_cast<size_t>(s));
  KernelAudit audit;
  Kahan mean;
  // g(x) = E(h | X_1 = x), one accumulator per support value of X_1.
  std::vector<Kahan> g(static_cast<size_t>(ss));
  while (true) {
    double prob = 1.0;
    for (int j = 0; j < s; ++j) {
      prob *= base.prob(idx[static_cast<size_t>(j)]);
      vals[static_cast<size_t>(j)] = base.value(idx[static_cast<size_t>(j)]);
    }
    const double h = product_kernel(vals, offset);
    audit.sup_abs = std::max(audit.sup_abs, std::abs(h));
    mean.add(prob * h);
    g[static_cast<size_t>(idx[0])].add(prob / base.prob(idx[0]) * h);

    perm = vals;
    std::sort(perm.begin(), perm.end());
    do {
      if (std::abs(product_kernel(perm, offset) - h) > 1e-12) {
        throw Error::invalid_model("kernel is not symmetric");
      }
    } while (std::next_permutation(perm.begin(), perm.end()));

    int j = s;
    bool done = true;
    while (j-- > 0) {
      if (++idx[static_cast<size_t>(j)] < ss) {
        done = false;
        break;
      }
      idx[static_cast<size_t>(j)] = 0;
    }
    if (done) break;
  }
  if (std::abs(mean.value()) > 1e-10) {
    throw Error::invalid_model("kernel is not centered: E h = " + fmt_double(mean.value()));
  }
  Kahan eg2;
  for (int v = 0; v < ss; ++v) {
    const double gv = g[static_cast<size_t>(v)].value();
    eg2.add(base.prob(v) * gv * gv);
  }
  audit.e_g_squared = eg2.value();
  return audit;
}

Sampler make_ustat_direct(int m, int s, BaseVariableSpec base, double nterms, double offset,
                          double scale) {
  return [m, s, base, nterms, offset, scale](RepDraws& draws) {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (int a = 0; a < m; ++a) {
      const double v = base.value(base.draw_index(draws.next_unit()));
      s1 += v;
      s2 += v * v;
      s3 += v * v * v;
    }
    // Elementary symmetric polynomial via power sums: the product kernel sum
    // in O(m) instead of O(m^s).
    const double es = (s == 2) ? (s1 * s1 - s2) / 2.0
                               : (s1 * s1 * s1 - 3.0 * s1 * s2 + 2.0 * s3) / 6.0;
    return (es - nterms * offset) * scale;
  };
}

std::vector<std::vector<int>> subset_index_sets(int m, int s) {
  std::vector<std::vector<int>> sets;
  std::vector<int> cur(static_cast<size_t>(s));
  for (int j = 0; j < s; ++j) cur[static_cast<size_t>(j)] = j;
  while (true) {
    sets.push_back(cur);
    int j = s - 1;
    while (j >= 0 && cur[static_cast<size_t>(j)] == m - s + j) --j;
    if (j < 0) break;
    ++cur[static_cast<size_t>(j)];
    for (int t = j + 1; t < s; ++t) cur[static_cast<size_t>(t)] = cur[static_cast<size_t>(t - 1)] + 1;
  }
  return sets;
}

// --- subgraph counts --------------------------------------------------------

int edge_id(int u, int v, int num_vertices) {
  if (u > v) std::swap(u, v);
  return u * num_vertices - u * (u + 1) / 2 + (v - u - 1);
}

std::vector<std::vector<int>> enumerate_copies(int num_vertices, const tails::PatternGraph& g) {
  const int v = g.num_vertices;
  double injective_maps = 1.0;
  for (int i = 0; i < v; ++i) injective_maps *= static_cast<double>(num_vertices - i);
  if (injective_maps > 2.0e6) {
    throw Error::unsupported_size("copy enumeration too large for the generic-model path");
  }
  std::set<std::vector<int>> copies;
  std::vector<int> vmap(static_cast<size_t>(v), -1);
  std::vector<bool> used(static_cast<size_t>(num_vertices), false);
  std::vector<int> ids(g.edges.size());
  auto recurse = [&](auto&& self, int pos) -> void {
    if (pos == v) {
      for (size_t e = 0; e < g.edges.size(); ++e) {
        ids[e] = edge_id(vmap[static_cast<size_t>(g.edges[e].first)],
                         vmap[static_cast<size_t>(g.edges[e].second)], num_vertices);
      }
      std::vector<int> key = ids;
      std::sort(key.begin(), key.end());
      copies.insert(std::move(key));
      return;
    }
    for (int cand = 0; cand < num_vertices; ++cand) {
      if (used[static_cast<size_t>(cand)]) continue;
      used[static_cast<size_t>(cand)] = true;
      vmap[static_cast<size_t>(pos)] = cand;
      self(self, pos + 1);
      used[static_cast<size_t>(cand)] = false;
    }
  };
  recurse(recurse, 0);
  return {copies.begin(), copies.end()};
}

double edge_sigma2_analytic(int num_vertices, double p) {
  return static_cast<double>(binom_u64(static_cast<uint64_t>(num_vertices), 2)) * p * (1.0 - p);
}

double triangle_sigma2_analytic(int num_vertices, double p) {
  const double c3 = static_cast<double>(binom_u64(static_cast<uint64_t>(num_vertices), 3));
  const double p3 = p * p * p;
  const double p5 = p3 * p * p;
  const double p6 = p3 * p3;
  // Distinct triangles share at most one edge; pairs sharing one edge have
  // covariance p^5 - p^6 and there are 3(N-3) such partners per triangle.
  return c3 * ((p3 - p6) + 3.0 * static_cast<double>(num_vertices - 3) * (p5 - p6));
}

Sampler make_edge_pattern_direct(int num_vertices, double p, double offset, double scale) {
  const BaseVariableSpec base = BaseVariableSpec::bernoulli(p);
  const int m = num_vertices * (num_vertices - 1) / 2;
  return [m, base, offset, scale](RepDraws& draws) {
    Kahan w;
    for (int e = 0; e < m; ++e) {
      const double bit = base.value(base.draw_index(draws.next_unit()));
      w.add((bit - offset) * scale);
    }
    return w.value();
  };
}

Sampler make_triangle_direct(int num_vertices, double p, double offset, double scale) {
  const BaseVariableSpec base = BaseVariableSpec::bernoulli(p);
  return [num_vertices, base, offset, scale](RepDraws& draws) {
    const size_t n = static_cast<size_t>(num_vertices);
    static thread_local std::vector<uint8_t> adj;
    adj.assign(n * n, 0);
    // Edge draws in edge-id (lexicographic pair) order, matching sample_base.
    for (size_t u = 0; u < n; ++u) {
      for (size_t v = u + 1; v < n; ++v) {
        const auto bit = static_cast<uint8_t>(base.draw_index(draws.next_unit()));
        adj[u * n + v] = bit;
      }
    }
    // Vertex-triple lex order equals the copy order of the generic model, so
    // the two samplers agree exactly.
    Kahan w;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        for (size_t k = j + 1; k < n; ++k) {
          const bool full = adj[i * n + j] && adj[i * n + k] && adj[j * n + k];
          w.add(((full ? 1.0 : 0.0) - offset) * scale);
        }
      }
    }
    return w.value();
  };
}

bool pattern_is(const tails::PatternGraph& g, const tails::PatternGraph& named) {
  if (g.num_vertices != named.num_vertices || g.edges.size() != named.edges.size()) return false;
  auto canon = [](const tails::PatternGraph& x) {
    std::vector<std::pair<int, int>> es;
    for (auto [a, b] : x.edges) es.emplace_back(std::min(a, b), std::max(a, b));
    std::sort(es.begin(), es.end());
    return es;
  };
  return canon(g) == canon(named);
}

}  // namespace

BuiltModel build_kruns(const KRunsSpec& spec, const McOptions& sigma_mc) {
  if (!(spec.k > 1) || spec.n <= static_cast<uint64_t>(spec.k)) {
    throw Error::invalid_model("k-runs needs 1 < k < n");
  }
  if (!(spec.p > 0.0 && spec.p < 1.0)) throw Error::invalid_model("k-runs needs p in (0,1)");

  const double offset = std::pow(spec.p, spec.k);
  const double raw_delta = std::max(offset, 1.0 - offset);

  BuiltModel out;
  out.name = "kruns(n=" + std::to_string(spec.n) + ",k=" + std::to_string(spec.k) +
             ",p=" + fmt_double(spec.p) + ")";

  if (spec.k == 2) {
    out.sigma2_raw = moments::kruns_sigma2_analytic(spec.n, spec.p);
    out.sigma_method = SigmaMethod::analytic;
    out.gamma_analytic = moments::kruns_gamma_analytic(spec.n, spec.p);
  } else {
    const double exact_work = static_cast<double>(spec.n) * (2.0 * spec.k + 1.0) *
                              std::pow(4.0, spec.k);
    if (exact_work <= 2.0e7) {
      std::vector<BaseVariableSpec> base(spec.n, BaseVariableSpec::bernoulli(spec.p));
      LocalStatisticModel raw(base, kruns_index_sets(spec.n, spec.k),
                              SummandSpec::product("kruns", offset, 1.0), raw_delta);
      out.sigma2_raw = moments::variance_exact(raw, build_dependency(raw));
      out.sigma_method = SigmaMethod::exact_enumeration;
    } else {
      const auto raw_sampler = make_kruns_direct(spec.n, spec.k, spec.p, offset, 1.0);
      const auto mc = moments::moments_mc(raw_sampler, sigma_mc.reps, sigma_mc.seed,
                                          sigma_mc.lanes);
      out.sigma2_raw = mc.var_w;
      out.sigma2_se = mc.se_var;
      out.sigma_method = SigmaMethod::monte_carlo;
    }
  }

  const double scale = 1.0 / std::sqrt(out.sigma2_raw);
  std::vector<BaseVariableSpec> base(spec.n, BaseVariableSpec::bernoulli(spec.p));
  out.model = std::make_shared<const LocalStatisticModel>(
      std::move(base), kruns_index_sets(spec.n, spec.k),
      SummandSpec::product("kruns", offset, scale), scale);
  out.direct = make_kruns_direct(spec.n, spec.k, spec.p, offset, scale);
  out.params = structural_params(*out.model, build_dependency(*out.model));
  return out;
}

BuiltModel build_ustat(const UStatSpec& spec, const McOptions& sigma_mc) {
  if (spec.kernel != "product") {
    throw Error::invalid_model("only the builtin 'product' kernel is supported");
  }
  if (spec.s < 2 || spec.m <= spec.s) throw Error::invalid_model("u-stat needs m > s >= 2");
  const BaseVariableSpec base = ustat_base_spec(spec);

  // Output-centered product kernel: h = prod(x_j) - (E X)^s.
  const double offset = std::pow(base.mean(), spec.s);
  const auto audit = audit_product_kernel(base, spec.s, offset);
  if (audit.e_g_squared <= 1e-12 && !spec.allow_degenerate) {
    throw Error::invalid_model(
        "degenerate U-statistic: E g^2(X_1) = 0 for this kernel/base combination");
  }
  const double c1 = spec.c1.value_or(audit.sup_abs);
  if (c1 + 1e-12 < audit.sup_abs) {
    throw Error::invalid_model("asserted c1 is below the enumerated sup |h|");
  }

  const uint64_t nterms = binom_u64(static_cast<uint64_t>(spec.m),
                                    static_cast<uint64_t>(spec.s));

  BuiltModel out;
  out.name = "ustat(m=" + std::to_string(spec.m) + ",s=" + std::to_string(spec.s) +
             ",kernel=product)";

  const bool model_path = spec.m <= 30;
  if (model_path) {
    std::vector<BaseVariableSpec> bases(static_cast<size_t>(spec.m), base);
    LocalStatisticModel raw(bases, subset_index_sets(spec.m, spec.s),
                            SummandSpec::product("ustat-product", offset, 1.0), c1);
    out.sigma2_raw = moments::variance_exact(raw, build_dependency(raw));
    out.sigma_method = SigmaMethod::exact_enumeration;
  } else {
    if (spec.s > 3) {
      throw Error::unsupported_size("direct U-statistic sampler supports s in {2,3}");
    }
    const auto raw_sampler = make_ustat_direct(spec.m, spec.s, base,
                                               static_cast<double>(nterms), offset, 1.0);
    const auto mc = moments::moments_mc(raw_sampler, sigma_mc.reps, sigma_mc.seed,
                                        sigma_mc.lanes);
    out.sigma2_raw = mc.var_w;
    out.sigma2_se = mc.se_var;
    out.sigma_method = SigmaMethod::monte_carlo;
  }

  const double sigma = std::sqrt(out.sigma2_raw);
  const double scale = 1.0 / sigma;
  if (model_path) {
    std::vector<BaseVariableSpec> bases(static_cast<size_t>(spec.m), base);
    out.model = std::make_shared<const LocalStatisticModel>(
        std::move(bases), subset_index_sets(spec.m, spec.s),
        SummandSpec::product("ustat-product", offset, scale), c1 / sigma);
    if (spec.s <= 3) {
      out.direct = make_ustat_direct(spec.m, spec.s, base, static_cast<double>(nterms),
                                     offset, scale);
    } else {
      auto model = out.model;
      out.direct = [model](RepDraws& draws) { return model->sample_w(draws); };
    }
    out.params = structural_params(*out.model, build_dependency(*out.model));
  } else {
    out.direct = make_ustat_direct(spec.m, spec.s, base, static_cast<double>(nterms),
                                   offset, scale);
    out.params.n = nterms;
    out.params.m = static_cast<uint64_t>(spec.m);
    out.params.s = static_cast<uint64_t>(spec.s);
    out.params.d = binom_u64(static_cast<uint64_t>(spec.m - 1),
                             static_cast<uint64_t>(spec.s - 1));
    out.params.delta = c1 / sigma;
  }
  return out;
}

BuiltModel build_subgraph(const SubgraphSpec& spec, const McOptions& sigma_mc) {
  spec.pattern.validate();
  if (spec.pattern.num_vertices > 8) {
    throw Error::unsupported_size("pattern graphs are limited to v(G) <= 8");
  }
  if (spec.num_vertices < spec.pattern.num_vertices) {
    throw Error::invalid_model("N must be at least v(G)");
  }
  if (!(spec.p > 0.0 && spec.p < 1.0)) throw Error::invalid_model("p must be in (0,1)");

  const int N = spec.num_vertices;
  const int e = spec.pattern.num_edges();
  const double offset = std::pow(spec.p, e);
  const uint64_t m = binom_u64(static_cast<uint64_t>(N), 2);
  const bool is_edge = pattern_is(spec.pattern, tails::pattern_edge());
  const bool is_triangle = pattern_is(spec.pattern, tails::pattern_triangle());

  BuiltModel out;
  out.name = "subgraph(N=" + std::to_string(N) + ",p=" + fmt_double(spec.p) +
             ",v=" + std::to_string(spec.pattern.num_vertices) +
             ",e=" + std::to_string(e) + ")";

  const bool model_feasible = N <= 12;
  std::vector<std::vector<int>> copies;
  if (model_feasible) copies = enumerate_copies(N, spec.pattern);

  // sigma^2: closed form for the edge and triangle patterns, exact
  // enumeration when feasible, Monte Carlo otherwise.
  if (is_edge) {
    out.sigma2_raw = edge_sigma2_analytic(N, spec.p);
    out.sigma_method = SigmaMethod::analytic;
  } else if (is_triangle) {
    out.sigma2_raw = triangle_sigma2_analytic(N, spec.p);
    out.sigma_method = SigmaMethod::analytic;
  } else if (model_feasible && e <= 10 && copies.size() <= 20000) {
    std::vector<BaseVariableSpec> bases(m, BaseVariableSpec::bernoulli(spec.p));
    LocalStatisticModel raw(bases, copies,
                            SummandSpec::product("subgraph-indicator", offset, 1.0),
                            std::max(offset, 1.0 - offset));
    out.sigma2_raw = moments::variance_exact(raw, build_dependency(raw));
    out.sigma_method = SigmaMethod::exact_enumeration;
  } else if (model_feasible) {
    std::vector<BaseVariableSpec> bases(m, BaseVariableSpec::bernoulli(spec.p));
    auto raw = std::make_shared<const LocalStatisticModel>(
        bases, copies, SummandSpec::product("subgraph-indicator", offset, 1.0),
        std::max(offset, 1.0 - offset));
    const auto mc = moments::moments_mc(
        [raw](RepDraws& draws) { return raw->sample_w(draws); }, sigma_mc.reps,
        sigma_mc.seed, sigma_mc.lanes);
    out.sigma2_raw = mc.var_w;
    out.sigma2_se = mc.se_var;
    out.sigma_method = SigmaMethod::monte_carlo;
  } else {
    throw Error::unsupported_size(
        "N too large for the generic-model path; only edge and triangle patterns "
        "have specialized counters");
  }

  const double sigma = std::sqrt(out.sigma2_raw);
  const double scale = 1.0 / sigma;

  if (model_feasible) {
    std::vector<BaseVariableSpec> bases(m, BaseVariableSpec::bernoulli(spec.p));
    out.model = std::make_shared<const LocalStatisticModel>(
        std::move(bases), copies, SummandSpec::product("subgraph-indicator", offset, scale),
        scale);
    out.params = structural_params(*out.model, build_dependency(*out.model));
  }

  if (is_edge) {
    out.direct = make_edge_pattern_direct(N, spec.p, offset, scale);
  } else if (is_triangle) {
    out.direct = make_triangle_direct(N, spec.p, offset, scale);
  } else {
    auto model = out.model;
    out.direct = [model](RepDraws& draws) { return model->sample_w(draws); };
  }

  if (!model_feasible) {
    // Edge / triangle handled above; parameters from the copy combinatorics.
    out.params.m = m;
    if (is_edge) {
      out.params.n = m;
      out.params.s = 1;
      out.params.d = 1;
      out.params.delta = std::max(spec.p, 1.0 - spec.p) * scale;
    } else {
      out.params.n = binom_u64(static_cast<uint64_t>(N), 3);
      out.params.s = 3;
      out.params.d = static_cast<uint64_t>(N - 2);
      out.params.delta = scale;
    }
  }
  return out;
}

BuiltModel iid_model(uint64_t n, const BaseVariableSpec& base) {
  if (n == 0) throw Error::invalid_model("iid model needs n >= 1");
  const double var = base.variance();
  if (!(var > 0.0)) throw Error::invalid_model("base variable must have positive variance");
  const double mean = base.mean();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n) * var);
  double dev = 0.0;
  for (int i = 0; i < base.support_size(); ++i) {
    dev = std::max(dev, std::abs(base.value(i) - mean));
  }

  BuiltModel out;
  out.name = "iid(n=" + std::to_string(n) + ",scale=" + fmt_double(scale) + ")";
  std::vector<BaseVariableSpec> bases(n, base);
  std::vector<std::vector<int>> sets(n);
  for (uint64_t i = 0; i < n; ++i) sets[i] = {static_cast<int>(i)};
  out.model = std::make_shared<const LocalStatisticModel>(
      std::move(bases), std::move(sets), SummandSpec::centered_identity(mean, scale),
      dev * scale);
  auto model = out.model;
  out.direct = [model](RepDraws& draws) { return model->sample_w(draws); };
  out.sigma2_raw = static_cast<double>(n) * var;
  out.sigma_method = SigmaMethod::analytic;
  out.params = structural_params(*out.model, build_dependency(*out.model));
  return out;
}

}  // namespace mdtk::apps
