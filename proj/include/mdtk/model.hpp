#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdtk/rng.hpp"

namespace mdtk {

// Anything that turns one rep's draw stream into one realization of W.
using Sampler = std::function<double(RepDraws&)>;

// One independent base variable X_alpha. All supported kinds have finite
// support, which is what makes exact enumeration possible everywhere.
class BaseVariableSpec {
 public:
  enum class Kind { bernoulli, rademacher, finite };

  static BaseVariableSpec bernoulli(double p);
  static BaseVariableSpec rademacher();
  static BaseVariableSpec finite(std::vector<std::pair<double, double>> support);

  Kind kind() const noexcept { return kind_; }
  int support_size() const noexcept { return static_cast<int>(values_.size()); }
  double value(int idx) const noexcept { return values_[static_cast<size_t>(idx)]; }
  double prob(int idx) const noexcept { return probs_[static_cast<size_t>(idx)]; }
  double bernoulli_p() const noexcept { return p_; }

  double mean() const noexcept;
  double variance() const noexcept;

  // Inverse-CDF draw walking the support in stored order; consumes one
  // uniform. Both generic and specialized samplers must use this rule so that
  // identical draws produce identical base values.
  int draw_index(double u) const noexcept;

 private:
  BaseVariableSpec() = default;
  Kind kind_ = Kind::rademacher;
  std::vector<double> values_;
  std::vector<double> probs_;
  double p_ = 0.0;  // bernoulli parameter, kept for serialization
};

// How summand i maps its restricted assignment to a value. Only builtin
// shapes and explicit value tables are supported; there is no expression
// language.
struct SummandSpec {
  enum class Kind { product, centered_identity, table };

  Kind kind = Kind::product;
  // External builtin name for serialization: "kruns", "ustat-product",
  // "subgraph-indicator" (all product-shaped) or "centered-identity".
  std::string builtin = "kruns";
  double offset = 0.0;  // product: (prod(values) - offset) * scale
  double scale = 1.0;
  double mean = 0.0;  // centered_identity: (value - mean) * scale
  // table: one flat table per summand, odometer order over the sorted index
  // set with the last coordinate varying fastest.
  std::vector<std::vector<double>> tables;

  static SummandSpec product(std::string builtin_name, double offset, double scale);
  static SummandSpec centered_identity(double mean, double scale);
  static SummandSpec table(std::vector<std::vector<double>> tables);
};

// W = sum_i xi_i with xi_i a function of the base variables in index_sets[i].
// Immutable after construction; safe to share across sampling lanes.
class LocalStatisticModel {
 public:
  LocalStatisticModel(std::vector<BaseVariableSpec> base,
                      std::vector<std::vector<int>> index_sets, SummandSpec summand,
                      std::optional<double> delta_bound = std::nullopt);

  int num_base() const noexcept { return static_cast<int>(base_.size()); }
  int num_summands() const noexcept { return static_cast<int>(index_sets_.size()); }
  const std::vector<int>& index_set(int i) const noexcept {
    return index_sets_[static_cast<size_t>(i)];
  }
  const BaseVariableSpec& base(int alpha) const noexcept {
    return base_[static_cast<size_t>(alpha)];
  }
  const SummandSpec& summand_spec() const noexcept { return summand_; }
  std::optional<double> delta_bound() const noexcept { return delta_bound_; }

  // xi_i at the restricted assignment; support_idx aligns with index_set(i).
  double summand(int i, std::span<const int> support_idx) const;

  // Draw one support index per base variable, in base order (exactly m
  // uniforms consumed).
  void sample_base(RepDraws& draws, std::span<int> idx_out) const;

  // W at a full base assignment (support indices for all m bases).
  double eval_w(std::span<const int> base_idx) const;

  // Draw all bases and evaluate W; consumes exactly m uniforms.
  double sample_w(RepDraws& draws) const;

  // a.s. bound on max_i |xi_i|: the asserted bound if given, otherwise the
  // enumerated supremum (available when per-summand enumeration was feasible
  // at construction).
  double delta() const;

  // True when the construction-time centering/sup enumeration ran.
  bool summands_verified() const noexcept { return verified_; }

 private:
  void validate_and_enumerate();

  std::vector<BaseVariableSpec> base_;
  std::vector<std::vector<int>> index_sets_;
  SummandSpec summand_;
  std::optional<double> delta_bound_;
  double sup_abs_summand_ = 0.0;
  bool verified_ = false;
};

// (LD1)-(LD3) neighborhood system plus the structural parameters.
struct DependencyStructure {
  std::vector<std::vector<int>> n_alpha;  // per base: summands whose index set contains it
  std::vector<std::vector<int>> a_i;      // per summand: LD1 neighborhood
  int s = 0;                              // max |I_i|
  int d = 0;                              // max |N_alpha|
  double delta = 0.0;

  // Union of N_alpha over the given base ids: yields A_ij, A_ijk, ... for the
  // union of the corresponding index sets. Deterministic (sorted).
  std::vector<int> neighbors_of_bases(std::span<const int> bases) const;
};

DependencyStructure build_dependency(const LocalStatisticModel& model);

struct StructuralParams {
  uint64_t n = 0;
  uint64_t m = 0;
  uint64_t s = 0;
  uint64_t d = 0;
  double delta = 0.0;
};

StructuralParams structural_params(const LocalStatisticModel& model,
                                   const DependencyStructure& deps);

// Sorted union of the index sets of the given summands.
std::vector<int> union_index_sets(const LocalStatisticModel& model,
                                  std::span<const int> summands);

// Walk the joint support of the given sorted base ids, calling
// f(support_indices, joint_probability) once per configuration. Probabilities
// are products of per-base log-probabilities re-exponentiated at the leaf.
void enumerate_joint(const LocalStatisticModel& model, std::span<const int> bases,
                     const std::function<void(std::span<const int>, double)>& f);

// Number of joint configurations of the given bases, saturating at cap.
uint64_t joint_size(const LocalStatisticModel& model, std::span<const int> bases,
                    uint64_t cap);

// Model description file (JSON).
LocalStatisticModel model_from_json(const std::string& text);
std::string model_to_json(const LocalStatisticModel& model);

}  // namespace mdtk
