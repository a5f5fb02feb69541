#include "mdtk/model.hpp"

#include <algorithm>
#include <cmath>

#include "mdtk/common.hpp"

namespace mdtk {

namespace {

// Construction-time verification enumerates each summand's joint support to
// check centering and to find sup|xi_i|. Skipped (delta must then be
// asserted) once the total work would exceed this budget.
constexpr uint64_t kVerifyBudget = uint64_t{1} << 22;

}  // namespace

BaseVariableSpec BaseVariableSpec::bernoulli(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error::invalid_model("bernoulli p must be in (0,1)");
  BaseVariableSpec b;
  b.kind_ = Kind::bernoulli;
  b.values_ = {0.0, 1.0};
  b.probs_ = {1.0 - p, p};
  b.p_ = p;
  return b;
}

BaseVariableSpec BaseVariableSpec::rademacher() {
  BaseVariableSpec b;
  b.kind_ = Kind::rademacher;
  b.values_ = {-1.0, 1.0};
  b.probs_ = {0.5, 0.5};
  return b;
}

BaseVariableSpec BaseVariableSpec::finite(std::vector<std::pair<double, double>> support) {
  if (support.empty()) throw Error::invalid_model("finite support must be nonempty");
  BaseVariableSpec b;
  b.kind_ = Kind::finite;
  double total = 0.0;
  for (const auto& [v, p] : support) {
    if (!(p > 0.0)) throw Error::invalid_model("finite-support probabilities must be positive");
    b.values_.push_back(v);
    b.probs_.push_back(p);
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error::invalid_model("finite-support probabilities must sum to 1 within 1e-12");
  }
  return b;
}

double BaseVariableSpec::mean() const noexcept {
  double m = 0.0;
  for (size_t i = 0; i < values_.size(); ++i) m += values_[i] * probs_[i];
  return m;
}

double BaseVariableSpec::variance() const noexcept {
  const double m = mean();
  double v = 0.0;
  for (size_t i = 0; i < values_.size(); ++i) {
    v += probs_[i] * (values_[i] - m) * (values_[i] - m);
  }
  return v;
}

int BaseVariableSpec::draw_index(double u) const noexcept {
  double acc = 0.0;
  const int last = static_cast<int>(values_.size()) - 1;
  for (int i = 0; i < last; ++i) {
    acc += probs_[static_cast<size_t>(i)];
    if (u < acc) return i;
  }
  return last;
}

SummandSpec SummandSpec::product(std::string builtin_name, double offset, double scale) {
  SummandSpec s;
  s.kind = Kind::product;
  s.builtin = std::move(builtin_name);
  s.offset = offset;
  s.scale = scale;
  return s;
}

SummandSpec SummandSpec::centered_identity(double mean, double scale) {
  SummandSpec s;
  s.kind = Kind::centered_identity;
  s.builtin = "centered-identity";
  s.mean = mean;
  s.scale = scale;
  return s;
}

SummandSpec SummandSpec::table(std::vector<std::vector<double>> tables) {
  SummandSpec s;
  s.kind = Kind::table;
  s.builtin.clear();
  s.tables = std::move(tables);
  return s;
}

LocalStatisticModel::LocalStatisticModel(std::vector<BaseVariableSpec> base,
                                         std::vector<std::vector<int>> index_sets,
                                         SummandSpec summand,
                                         std::optional<double> delta_bound)
    : base_(std::move(base)),
      index_sets_(std::move(index_sets)),
      summand_(std::move(summand)),
      delta_bound_(delta_bound) {
  validate_and_enumerate();
}

void LocalStatisticModel::validate_and_enumerate() {
  if (base_.empty()) throw Error::invalid_model("model needs at least one base variable");
  if (index_sets_.empty()) throw Error::invalid_model("model needs at least one summand");
  const int m = num_base();
  for (auto& is : index_sets_) {
    if (is.empty()) throw Error::invalid_model("empty index set");
    std::sort(is.begin(), is.end());
    is.erase(std::unique(is.begin(), is.end()), is.end());
    if (is.front() < 0 || is.back() >= m) {
      throw Error::invalid_model("index set out of range");
    }
  }
  if (summand_.kind == SummandSpec::Kind::table &&
      summand_.tables.size() != index_sets_.size()) {
    throw Error::invalid_model("table summand needs one table per summand");
  }

  // Total enumeration budget across all summands.
  uint64_t total = 0;
  bool feasible = true;
  for (const auto& is : index_sets_) {
    uint64_t configs = 1;
    for (int alpha : is) {
      configs *= static_cast<uint64_t>(base_[static_cast<size_t>(alpha)].support_size());
      if (configs > kVerifyBudget) break;
    }
    total += configs;
    if (total > kVerifyBudget) {
      feasible = false;
      break;
    }
  }

  if (!feasible) {
    if (!delta_bound_.has_value()) {
      throw Error::missing_delta(
          "delta bound neither asserted nor computable (per-summand enumeration too large)");
    }
    return;
  }

  double sup = 0.0;
  for (int i = 0; i < num_summands(); ++i) {
    const auto& is = index_sets_[static_cast<size_t>(i)];
    if (summand_.kind == SummandSpec::Kind::table) {
      size_t expected = 1;
      for (int alpha : is) {
        expected *= static_cast<size_t>(base_[static_cast<size_t>(alpha)].support_size());
      }
      if (summand_.tables[static_cast<size_t>(i)].size() != expected) {
        throw Error::invalid_model("summand table size does not match joint support");
      }
    }
    Kahan mean;
    enumerate_joint(*this, is, [&](std::span<const int> idx, double prob) {
      const double v = summand(i, idx);
      mean.add(prob * v);
      sup = std::max(sup, std::abs(v));
    });
    if (std::abs(mean.value()) > 1e-10) {
      throw Error::invalid_model("summand " + std::to_string(i) +
                                 " is not centered: E xi = " + std::to_string(mean.value()));
    }
  }
  sup_abs_summand_ = sup;
  verified_ = true;
}

double LocalStatisticModel::summand(int i, std::span<const int> support_idx) const {
  const auto& is = index_sets_[static_cast<size_t>(i)];
  switch (summand_.kind) {
    case SummandSpec::Kind::product: {
      double prod = 1.0;
      for (size_t j = 0; j < is.size(); ++j) {
        prod *= base_[static_cast<size_t>(is[j])].value(support_idx[j]);
      }
      return (prod - summand_.offset) * summand_.scale;
    }
    case SummandSpec::Kind::centered_identity: {
      const double v = base_[static_cast<size_t>(is[0])].value(support_idx[0]);
      return (v - summand_.mean) * summand_.scale;
    }
    case SummandSpec::Kind::table: {
      size_t flat = 0;
      for (size_t j = 0; j < is.size(); ++j) {
        flat = flat * static_cast<size_t>(base_[static_cast<size_t>(is[j])].support_size()) +
               static_cast<size_t>(support_idx[j]);
      }
      return summand_.tables[static_cast<size_t>(i)][flat];
    }
  }
  return 0.0;
}

void LocalStatisticModel::sample_base(RepDraws& draws, std::span<int> idx_out) const {
  for (size_t alpha = 0; alpha < base_.size(); ++alpha) {
    idx_out[alpha] = base_[alpha].draw_index(draws.next_unit());
  }
}

double LocalStatisticModel::eval_w(std::span<const int> base_idx) const {
  Kahan w;
  std::vector<int> restricted;
  for (int i = 0; i < num_summands(); ++i) {
    const auto& is = index_sets_[static_cast<size_t>(i)];
    restricted.resize(is.size());
    for (size_t j = 0; j < is.size(); ++j) restricted[j] = base_idx[static_cast<size_t>(is[j])];
    w.add(summand(i, restricted));
  }
  return w.value();
}

double LocalStatisticModel::sample_w(RepDraws& draws) const {
  std::vector<int> idx(base_.size());
  sample_base(draws, idx);
  return eval_w(idx);
}

double LocalStatisticModel::delta() const {
  if (delta_bound_.has_value()) return *delta_bound_;
  if (!verified_) {
    throw Error::missing_delta("delta bound neither asserted nor computable");
  }
  return sup_abs_summand_;
}

DependencyStructure build_dependency(const LocalStatisticModel& model) {
  DependencyStructure deps;
  const int m = model.num_base();
  const int n = model.num_summands();
  deps.n_alpha.assign(static_cast<size_t>(m), {});
  for (int i = 0; i < n; ++i) {
    for (int alpha : model.index_set(i)) {
      deps.n_alpha[static_cast<size_t>(alpha)].push_back(i);
    }
    deps.s = std::max(deps.s, static_cast<int>(model.index_set(i).size()));
  }
  for (const auto& na : deps.n_alpha) {
    deps.d = std::max(deps.d, static_cast<int>(na.size()));
  }
  deps.a_i.assign(static_cast<size_t>(n), {});
  for (int i = 0; i < n; ++i) {
    deps.a_i[static_cast<size_t>(i)] = deps.neighbors_of_bases(model.index_set(i));
  }
  deps.delta = model.delta();
  return deps;
}

std::vector<int> DependencyStructure::neighbors_of_bases(std::span<const int> bases) const {
  std::vector<int> out;
  for (int alpha : bases) {
    const auto& na = n_alpha[static_cast<size_t>(alpha)];
    if (na.empty()) continue;
    std::vector<int> merged;
    merged.reserve(out.size() + na.size());
    std::set_union(out.begin(), out.end(), na.begin(), na.end(), std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

StructuralParams structural_params(const LocalStatisticModel& model,
                                   const DependencyStructure& deps) {
  StructuralParams p;
  p.n = static_cast<uint64_t>(model.num_summands());
  p.m = static_cast<uint64_t>(model.num_base());
  p.s = static_cast<uint64_t>(deps.s);
  p.d = static_cast<uint64_t>(deps.d);
  p.delta = model.delta();
  return p;
}

std::vector<int> union_index_sets(const LocalStatisticModel& model,
                                  std::span<const int> summands) {
  std::vector<int> out;
  for (int i : summands) {
    const auto& is = model.index_set(i);
    std::vector<int> merged;
    merged.reserve(out.size() + is.size());
    std::set_union(out.begin(), out.end(), is.begin(), is.end(), std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

void enumerate_joint(const LocalStatisticModel& model, std::span<const int> bases,
                     const std::function<void(std::span<const int>, double)>& f) {
  const size_t k = bases.size();
  if (k == 0) return;
  std::vector<int> sizes(k);
  for (size_t j = 0; j < k; ++j) {
    sizes[j] = model.base(bases[j]).support_size();
  }
  std::vector<int> idx(k, 0);
  // Partial sums of log-probabilities: logp[j] covers coordinates [0, j).
  std::vector<double> logp(k + 1, 0.0);
  auto fill_from = [&](size_t j) {
    for (; j < k; ++j) {
      logp[j + 1] = logp[j] + std::log(model.base(bases[j]).prob(idx[j]));
    }
  };
  fill_from(0);
  while (true) {
    f(idx, std::exp(logp[k]));
    size_t j = k;
    while (j > 0) {
      --j;
      if (++idx[j] < sizes[j]) {
        fill_from(j);
        break;
      }
      idx[j] = 0;
      if (j == 0) return;
    }
  }
}

uint64_t joint_size(const LocalStatisticModel& model, std::span<const int> bases,
                    uint64_t cap) {
  uint64_t total = 1;
  for (int alpha : bases) {
    total *= static_cast<uint64_t>(model.base(alpha).support_size());
    if (total >= cap) return cap;
  }
  return total;
}

}  // namespace mdtk
