#include "mdtk/random_models.hpp"

#include <algorithm>
#include <cmath>

#include "mdtk/common.hpp"

namespace mdtk {

LocalStatisticModel random_tiny_model(uint64_t seed, uint64_t index,
                                      const RandomModelOptions& options) {
  RepDraws draws(seed, kAuxStreamBase / 2 + index);
  auto uniform_int = [&](int lo, int hi) {  // inclusive
    return lo + static_cast<int>(draws.next_unit() * (hi - lo + 1));
  };

  const int m = uniform_int(2, options.max_m);
  const int n = uniform_int(1, options.max_n);

  std::vector<BaseVariableSpec> base;
  base.reserve(static_cast<size_t>(m));
  for (int a = 0; a < m; ++a) {
    base.push_back(BaseVariableSpec::bernoulli(0.2 + 0.6 * draws.next_unit()));
  }

  std::vector<std::vector<int>> sets(static_cast<size_t>(n));
  for (auto& is : sets) {
    const int s = uniform_int(1, std::min(options.max_s, m));
    while (static_cast<int>(is.size()) < s) {
      const int alpha = uniform_int(0, m - 1);
      if (std::find(is.begin(), is.end(), alpha) == is.end()) is.push_back(alpha);
    }
    std::sort(is.begin(), is.end());
  }

  // Centered random value tables over each summand's joint support.
  std::vector<std::vector<double>> tables(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& is = sets[static_cast<size_t>(i)];
    size_t configs = 1;
    std::vector<double> probs;
    for (int alpha : is) {
      configs *= static_cast<size_t>(base[static_cast<size_t>(alpha)].support_size());
    }
    auto& table = tables[static_cast<size_t>(i)];
    table.resize(configs);
    for (auto& v : table) v = 2.0 * draws.next_unit() - 1.0;
    // Joint probability of config c in odometer order (last coordinate
    // fastest), matching the table layout.
    Kahan mean;
    for (size_t c = 0; c < configs; ++c) {
      double prob = 1.0;
      size_t rest = c;
      for (size_t j = is.size(); j-- > 0;) {
        const auto& b = base[static_cast<size_t>(is[j])];
        prob *= b.prob(static_cast<int>(rest % static_cast<size_t>(b.support_size())));
        rest /= static_cast<size_t>(b.support_size());
      }
      mean.add(prob * table[c]);
    }
    const double mu = mean.value();
    for (auto& v : table) v -= mu;
  }

  return LocalStatisticModel(std::move(base), std::move(sets),
                             SummandSpec::table(std::move(tables)));
}

}  // namespace mdtk
