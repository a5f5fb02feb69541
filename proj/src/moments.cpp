#include "mdtk/moments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "mdtk/common.hpp"

namespace mdtk::moments {

namespace {

constexpr uint64_t kJointCap = uint64_t{1} << 20;

// Materialized joint enumeration of one base-id union: configuration rows and
// their probabilities. Cached per union because translation-invariant models
// revisit the same union for many (j, k) pairs.
struct JointEnum {
  std::vector<int> bases;
  std::vector<double> probs;
  std::vector<int> configs;  // row-major, width = bases.size()
};

class UnionCache {
 public:
  explicit UnionCache(const LocalStatisticModel& model) : model_(model) {}

  const JointEnum& get(std::vector<int> bases) {
    auto it = map_.find(bases);
    if (it != map_.end()) return it->second;
    if (joint_size(model_, bases, kJointCap) >= kJointCap) {
      throw Error::unsupported_size("joint enumeration too large for exact moments");
    }
    JointEnum e;
    e.bases = bases;
    enumerate_joint(model_, bases, [&](std::span<const int> idx, double prob) {
      e.probs.push_back(prob);
      e.configs.insert(e.configs.end(), idx.begin(), idx.end());
    });
    auto [pos, inserted] = map_.emplace(std::move(bases), std::move(e));
    return pos->second;
  }

  void clear() { map_.clear(); }

 private:
  const LocalStatisticModel& model_;
  std::map<std::vector<int>, JointEnum> map_;
};

// Positions of the (sorted) subset inside the (sorted) superset.
void positions_in(const std::vector<int>& subset, const std::vector<int>& superset,
                  std::vector<int>& out) {
  out.clear();
  size_t j = 0;
  for (int v : subset) {
    while (superset[j] != v) ++j;
    out.push_back(static_cast<int>(j));
  }
}

// E[prod_t xi_{ids[t]}], enumerating the joint support of the union once.
double expect_product(const LocalStatisticModel& model, UnionCache& cache,
                      std::span<const int> ids) {
  const auto u = union_index_sets(model, ids);
  const auto& e = cache.get(u);
  const size_t width = e.bases.size();

  std::vector<std::vector<int>> pos(ids.size());
  for (size_t t = 0; t < ids.size(); ++t) {
    positions_in(model.index_set(ids[t]), e.bases, pos[t]);
  }

  Kahan acc;
  std::vector<int> restricted;
  for (size_t c = 0; c < e.probs.size(); ++c) {
    const int* cfg = e.configs.data() + c * width;
    double prod = 1.0;
    for (size_t t = 0; t < ids.size(); ++t) {
      restricted.resize(pos[t].size());
      for (size_t j = 0; j < pos[t].size(); ++j) restricted[j] = cfg[pos[t][j]];
      prod *= model.summand(ids[t], restricted);
    }
    acc.add(e.probs[c] * prod);
  }
  return acc.value();
}

void require_finite_support(const LocalStatisticModel& model) {
  // All supported base kinds are finite; kept as the declared error surface
  // for any future non-enumerable kind.
  if (model.num_base() == 0) {
    throw Error::unsupported_method("exact moments need finite-support base variables");
  }
}

}  // namespace

double variance_exact(const LocalStatisticModel& model, const DependencyStructure& deps) {
  require_finite_support(model);
  Kahan total;
  UnionCache cache(model);
  for (int i = 0; i < model.num_summands(); ++i) {
    for (int j : deps.a_i[static_cast<size_t>(i)]) {
      const int ids[] = {i, j};
      total.add(expect_product(model, cache, ids));
    }
    cache.clear();
  }
  return total.value();
}

double gamma_exact(const LocalStatisticModel& model, const DependencyStructure& deps) {
  require_finite_support(model);
  Kahan wide;    // k ranging over A_ij
  Kahan narrow;  // k ranging over A_i
  UnionCache cache(model);
  for (int i = 0; i < model.num_summands(); ++i) {
    const auto& a_i = deps.a_i[static_cast<size_t>(i)];
    for (int j : a_i) {
      const int pair_ids[] = {i, j};
      const auto a_ij = deps.neighbors_of_bases(union_index_sets(model, pair_ids));
      for (int k : a_ij) {
        const int ids[] = {i, j, k};
        wide.add(expect_product(model, cache, ids));
      }
      for (int k : a_i) {
        const int ids[] = {i, j, k};
        narrow.add(expect_product(model, cache, ids));
      }
    }
    cache.clear();
  }
  return 2.0 * wide.value() - narrow.value();
}

double kruns_sigma2_analytic(uint64_t n, double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error::domain("kruns p must be in (0,1)");
  if (n <= 2) throw Error::domain("kruns needs n > 2");
  const double p2 = p * p;
  return static_cast<double>(n) * (p2 + 2.0 * p2 * p - 3.0 * p2 * p2);
}

double kruns_gamma_analytic(uint64_t n, double p) {
  const double s2 = kruns_sigma2_analytic(n, p);
  const double sigma = std::sqrt(s2);
  const double p2 = p * p;
  const double p3 = p2 * p;
  const double poly = p2 + 6.0 * p3 - 3.0 * p2 * p2 - 24.0 * p2 * p3 + 20.0 * p3 * p3;
  return static_cast<double>(n) / (s2 * sigma) * poly;
}

MomentSummary moments_mc(const Sampler& sampler, uint64_t reps, uint64_t seed, int lanes) {
  if (reps < 1000) throw Error::domain("moments_mc needs reps >= 1000");
  if (lanes < 1) throw Error::domain("lanes must be >= 1");

  struct Partial {
    Kahan pow[6];
  };
  std::vector<Partial> partials(static_cast<size_t>(lanes));
  {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(lanes));
    for (int lane = 0; lane < lanes; ++lane) {
      const uint64_t begin = reps * static_cast<uint64_t>(lane) / static_cast<uint64_t>(lanes);
      const uint64_t end = reps * static_cast<uint64_t>(lane + 1) / static_cast<uint64_t>(lanes);
      workers.emplace_back([&, lane, begin, end]() {
        Partial& p = partials[static_cast<size_t>(lane)];
        for (uint64_t rep = begin; rep < end; ++rep) {
          RepDraws draws(seed, rep);
          const double w = sampler(draws);
          double pw = 1.0;
          for (auto& acc : p.pow) {
            pw *= w;
            acc.add(pw);
          }
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  // Merge lane partials in lane order so results are reproducible for a
  // fixed (seed, reps, lanes).
  double moment[6];
  for (int k = 0; k < 6; ++k) {
    Kahan total;
    for (const auto& p : partials) total.add(p.pow[k].value());
    moment[k] = total.value() / static_cast<double>(reps);
  }

  const double m1 = moment[0], m2 = moment[1], m3 = moment[2];
  const double m4 = moment[3], m6 = moment[5];
  MomentSummary out;
  out.method = Method::monte_carlo;
  out.mean = m1;
  out.var_w = m2 - m1 * m1;
  out.sigma2 = out.var_w;
  out.gamma = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
  const double n = static_cast<double>(reps);
  out.se_var = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  out.se_gamma = std::sqrt(std::max(0.0, m6 - m3 * m3) / n);
  return out;
}

MomentSummary moments_mc(const LocalStatisticModel& model, uint64_t reps, uint64_t seed,
                         int lanes) {
  return moments_mc([&model](RepDraws& draws) { return model.sample_w(draws); }, reps, seed,
                    lanes);
}

}  // namespace mdtk::moments
