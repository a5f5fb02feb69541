#include "mdtk/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mdtk/common.hpp"

namespace mdtk::oracle {

namespace {
constexpr uint64_t kStateCap = uint64_t{1} << 24;
constexpr double kMergeTol = 1e-12;
}  // namespace

ExactDistribution exact_distribution(const LocalStatisticModel& model) {
  std::vector<int> all_bases(static_cast<size_t>(model.num_base()));
  std::iota(all_bases.begin(), all_bases.end(), 0);
  if (joint_size(model, all_bases, kStateCap + 1) > kStateCap) {
    throw Error::unsupported_size("full enumeration exceeds 2^24 configurations");
  }

  // Accumulate probability mass per exact W value first; merge close atoms
  // afterwards. Compensated accumulation per atom.
  std::map<double, Kahan> mass;
  enumerate_joint(model, all_bases, [&](std::span<const int> idx, double prob) {
    mass[model.eval_w(idx)].add(prob);
  });

  ExactDistribution dist;
  Kahan total;
  // Merge runs of values within kMergeTol of the previous atom; the merged
  // atom keeps the probability-weighted mean value.
  double run_value = 0.0;
  Kahan run_prob;
  Kahan run_weighted;
  bool open = false;
  auto flush = [&]() {
    if (!open) return;
    const double p = run_prob.value();
    dist.values.push_back(run_weighted.value() / p);
    dist.probs.push_back(p);
    total.add(p);
    run_prob = Kahan{};
    run_weighted = Kahan{};
    open = false;
  };
  for (const auto& [value, prob] : mass) {
    const double p = prob.value();
    if (open && value - run_value > kMergeTol) flush();
    if (!open) open = true;
    run_value = value;
    run_prob.add(p);
    run_weighted.add(p * value);
  }
  flush();
  dist.total_prob = total.value();
  return dist;
}

double exact_tail(const ExactDistribution& dist, double x, Side side) {
  Kahan acc;
  if (side == Side::right) {
    for (size_t i = dist.values.size(); i-- > 0;) {
      if (dist.values[i] > x) acc.add(dist.probs[i]);
      else break;
    }
  } else {
    for (size_t i = 0; i < dist.values.size(); ++i) {
      if (dist.values[i] < -x) acc.add(dist.probs[i]);
      else break;
    }
  }
  return acc.value();
}

Moments4 exact_moments(const ExactDistribution& dist) {
  Kahan mean;
  for (size_t i = 0; i < dist.values.size(); ++i) {
    mean.add(dist.probs[i] * dist.values[i]);
  }
  Moments4 out;
  out.mean = mean.value();
  Kahan m2, m3, m4;
  for (size_t i = 0; i < dist.values.size(); ++i) {
    const double c = dist.values[i] - out.mean;
    const double c2 = c * c;
    m2.add(dist.probs[i] * c2);
    m3.add(dist.probs[i] * c2 * c);
    m4.add(dist.probs[i] * c2 * c2);
  }
  out.var = m2.value();
  out.third = m3.value();
  out.fourth = m4.value();
  return out;
}

}  // namespace mdtk::oracle
