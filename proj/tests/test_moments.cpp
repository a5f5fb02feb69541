#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mdtk/applications.hpp"
#include "mdtk/common.hpp"
#include "mdtk/moments.hpp"
#include "mdtk/oracle.hpp"
#include "mdtk/random_models.hpp"

using namespace mdtk;

namespace {

LocalStatisticModel raw_kruns(uint64_t n, int k, double p) {
  std::vector<BaseVariableSpec> base(n, BaseVariableSpec::bernoulli(p));
  std::vector<std::vector<int>> sets(n);
  for (uint64_t i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) sets[i].push_back(static_cast<int>((i + j) % n));
  }
  const double offset = std::pow(p, k);
  return LocalStatisticModel(std::move(base), std::move(sets),
                             SummandSpec::product("kruns", offset, 1.0),
                             std::max(offset, 1.0 - offset));
}

}  // namespace

TEST_CASE("normalized 2-runs variance is 1") {
  const auto built = apps::build_kruns({6, 2, 0.3});
  const auto deps = build_dependency(*built.model);
  CHECK(moments::variance_exact(*built.model, deps) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("raw 2-runs variance equals the closed form") {
  const auto model = raw_kruns(6, 2, 0.3);
  const auto deps = build_dependency(model);
  const double expected = 6.0 * (0.09 + 2 * 0.027 - 3 * 0.0081);
  CHECK(moments::variance_exact(model, deps) == doctest::Approx(expected).epsilon(1e-10));
  CHECK(moments::kruns_sigma2_analytic(6, 0.3) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("disjoint supports reduce the variance to a diagonal sum") {
  std::vector<BaseVariableSpec> base(5, BaseVariableSpec::rademacher());
  std::vector<std::vector<int>> sets = {{0}, {1}, {2}, {3}, {4}};
  LocalStatisticModel model(base, sets, SummandSpec::centered_identity(0.0, 0.5));
  const auto deps = build_dependency(model);
  // Each xi has variance 0.25; the sum over A_i = {i} gives 1.25.
  CHECK(moments::variance_exact(model, deps) == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("third moment decomposition matches the enumeration oracle") {
  const auto built = apps::build_kruns({6, 2, 0.3});
  const auto deps = build_dependency(*built.model);
  const auto dist = oracle::exact_distribution(*built.model);
  const auto mom = oracle::exact_moments(dist);
  CHECK(std::abs(moments::gamma_exact(*built.model, deps) - mom.third) < 1e-10);
}

TEST_CASE("symmetric models have zero skewness") {
  const auto built = apps::iid_model(8, BaseVariableSpec::rademacher());
  const auto deps = build_dependency(*built.model);
  CHECK(std::abs(moments::gamma_exact(*built.model, deps)) < 1e-12);
}

TEST_CASE("k-runs analytic sigma2") {
  CHECK(moments::kruns_sigma2_analytic(1500, 0.25) ==
        doctest::Approx(1500.0 * (0.0625 + 0.03125 - 0.01171875)).epsilon(1e-15));
  CHECK(moments::kruns_sigma2_analytic(1500, 0.25) == doctest::Approx(123.046875));
  CHECK(moments::kruns_sigma2_analytic(1500, 1e-8) < 1e-10);  // p -> 0 limit
  CHECK_THROWS_AS((void)moments::kruns_sigma2_analytic(1500, 0.0), Error);
  CHECK_THROWS_AS((void)moments::kruns_sigma2_analytic(1500, 1.0), Error);
  CHECK_THROWS_AS((void)moments::kruns_sigma2_analytic(2, 0.5), Error);
}

TEST_CASE("k-runs analytic gamma agrees with the Eq-50 route") {
  // Paper's headline value.
  const double g1500 = moments::kruns_gamma_analytic(1500, 0.25);
  CHECK(g1500 >= 0.1375);
  CHECK(g1500 <= 0.1385);

  for (const auto& [n, p] : std::vector<std::pair<uint64_t, double>>{{6, 0.3}, {100, 0.5}}) {
    const auto built = apps::build_kruns({n, 2, p});
    const auto deps = build_dependency(*built.model);
    CHECK(moments::gamma_exact(*built.model, deps) ==
          doctest::Approx(moments::kruns_gamma_analytic(n, p)).epsilon(1e-10));
  }

  // Large n: analytic vs the decomposition, still fast.
  const auto built = apps::build_kruns({1500, 2, 0.25});
  const auto deps = build_dependency(*built.model);
  CHECK(moments::gamma_exact(*built.model, deps) == doctest::Approx(g1500).epsilon(1e-9));
}

TEST_CASE("monte carlo moments: degenerate model") {
  LocalStatisticModel constant({BaseVariableSpec::finite({{1.0, 1.0}})}, {{0}},
                               SummandSpec::centered_identity(1.0, 1.0));
  const auto mc = moments::moments_mc(constant, 2000, 11);
  CHECK(mc.var_w == 0.0);
  CHECK(mc.gamma == 0.0);
  CHECK(*mc.se_var == 0.0);
  CHECK(*mc.se_gamma == 0.0);
}

TEST_CASE("monte carlo moments: symmetric sum has zero skewness within noise") {
  const auto built = apps::iid_model(100, BaseVariableSpec::rademacher());
  const auto mc = moments::moments_mc(built.direct, 100000, 17, 2);
  CHECK(std::abs(mc.gamma) <= 4.0 * *mc.se_gamma);
  CHECK(mc.var_w == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("monte carlo moments: k-runs gamma within 4 standard errors") {
  const auto built = apps::build_kruns({300, 2, 0.25});
  const auto mc = moments::moments_mc(built.direct, 150000, 23, 2);
  const double expected = moments::kruns_gamma_analytic(300, 0.25);
  CHECK(std::abs(mc.gamma - expected) <= 4.0 * *mc.se_gamma);
  CHECK(std::abs(mc.var_w - 1.0) <= 4.0 * *mc.se_var);
  CHECK_THROWS_AS((void)moments::moments_mc(built.direct, 10, 23, 1), Error);
}

TEST_CASE("exact moments agree with the oracle on random tiny models") {
  double max_var = 0.0, max_gamma = 0.0;
  for (uint64_t t = 0; t < 30; ++t) {
    const auto model = random_tiny_model(555, t);
    const auto deps = build_dependency(model);
    const auto mom = oracle::exact_moments(oracle::exact_distribution(model));
    const double raw_var = mom.var + mom.mean * mom.mean;
    const double raw_third =
        mom.third + 3.0 * mom.mean * mom.var + mom.mean * mom.mean * mom.mean;
    max_var = std::max(max_var, std::abs(moments::variance_exact(model, deps) - raw_var));
    max_gamma = std::max(max_gamma, std::abs(moments::gamma_exact(model, deps) - raw_third));
  }
  CHECK(max_var < 1e-9);
  CHECK(max_gamma < 1e-9);
}

TEST_CASE("moment computations are invariant under summand relabeling") {
  const auto model = random_tiny_model(777, 4);
  const int n = model.num_summands();
  // Reversed label order.
  std::vector<std::vector<int>> sets;
  std::vector<std::vector<double>> tables;
  for (int i = n - 1; i >= 0; --i) {
    sets.push_back(model.index_set(i));
    tables.push_back(model.summand_spec().tables[static_cast<size_t>(i)]);
  }
  std::vector<BaseVariableSpec> base;
  for (int a = 0; a < model.num_base(); ++a) base.push_back(model.base(a));
  LocalStatisticModel relabeled(base, sets, SummandSpec::table(tables));

  const auto d1 = build_dependency(model);
  const auto d2 = build_dependency(relabeled);
  CHECK(moments::variance_exact(model, d1) ==
        doctest::Approx(moments::variance_exact(relabeled, d2)).epsilon(1e-12));
  CHECK(moments::gamma_exact(model, d1) ==
        doctest::Approx(moments::gamma_exact(relabeled, d2)).epsilon(1e-12));
}

TEST_CASE("skewness obeys the structural bound |gamma| <= 4 n s^2 d^2 delta^3") {
  const auto check = [](const apps::BuiltModel& built) {
    const auto deps = build_dependency(*built.model);
    const double gamma = moments::gamma_exact(*built.model, deps);
    const auto& p = built.params;
    const double bound = 4.0 * static_cast<double>(p.n) * static_cast<double>(p.s * p.s) *
                         static_cast<double>(p.d * p.d) * std::pow(p.delta, 3);
    CHECK(std::abs(gamma) <= bound);
  };
  check(apps::build_kruns({20, 2, 0.3}));
  check(apps::build_subgraph({5, 0.4, tails::pattern_triangle()}));
}
