#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdtk/model.hpp"

namespace mdtk::mc {

struct ExperimentConfig {
  std::vector<double> x_grid;  // strictly increasing, > 0
  uint64_t reps = 0;
  uint64_t seed = 0;
  int lanes = 1;
};

struct TailCounts {
  std::vector<uint64_t> right;  // # of W >  x, per grid point
  std::vector<uint64_t> left;   // # of W < -x, per grid point
  uint64_t reps = 0;
};

struct TailEstimate {
  double x = 0.0;
  uint64_t count_right = 0;
  uint64_t count_left = 0;
  uint64_t reps = 0;
  double p_right = 0.0;
  double p_left = 0.0;
  double ci_right_lo = 0.0, ci_right_hi = 0.0;  // Wilson 95%
  double ci_left_lo = 0.0, ci_left_hi = 0.0;
};

struct RelativeErrorRow {
  double x = 0.0;
  double l_n = 0.0, l_skew = 0.0, r_n = 0.0, r_skew = 0.0;
  double l_n_hw = 0.0, l_skew_hw = 0.0, r_n_hw = 0.0, r_skew_hw = 0.0;  // 95% half-widths
};

struct WilsonInterval {
  double lo = 0.0, hi = 0.0;
};

// Wilson score interval for count successes out of reps at normal quantile z.
WilsonInterval wilson_interval(uint64_t count, uint64_t reps, double z);

// Tail counters over reps [rep_begin, rep_end), partitioned across lanes.
// Counts depend only on (seed, rep range, grid): lane scheduling never
// changes them, and disjoint ranges merge by addition.
TailCounts estimate_tail_counts(const Sampler& sampler, std::span<const double> x_grid,
                                uint64_t rep_begin, uint64_t rep_end, uint64_t seed,
                                int lanes);

std::vector<TailEstimate> estimate_tails(const Sampler& sampler, const ExperimentConfig& config);

// The four Table-1 statistics per grid point, with half-widths propagated
// from the Wilson intervals.
std::vector<RelativeErrorRow> relative_error_table(std::span<const TailEstimate> estimates,
                                                   double gamma);

struct MgfPoint {
  double t = 0.0;
  double log_mgf = 0.0;      // log of the sample mean of e^{tW}
  double reference = 0.0;    // t^2/2 + gamma t^3/6
  double discrepancy = 0.0;  // log_mgf - reference
  double se = 0.0;           // bootstrap (200 resamples of batch partials)
  bool in_range = false;     // t <= t_max guideline
};

struct MgfReport {
  std::vector<MgfPoint> points;
  uint64_t reps = 0;
  uint64_t seed = 0;
  int lanes = 1;
  double t_max = 0.0;
};

// Empirical check of the moment generating function bound. Batch partials
// use a fixed logical batch layout independent of the lane count.
MgfReport mgf_check(const Sampler& sampler, std::span<const double> t_grid, uint64_t reps,
                    uint64_t seed, int lanes, double gamma, double t_max_guideline);

// CSV rows in the exact column schema
//   x,p_left,p_right,ci_left_lo,ci_left_hi,ci_right_lo,ci_right_hi,
//   L_N,L_skew,R_N,R_skew,gamma,reps,seed,lanes,rng_id
// with reals at 17 significant digits. `header_lines` are emitted verbatim
// first (manifest comment and column header).
std::string tail_rows_csv(std::span<const TailEstimate> estimates,
                          std::span<const RelativeErrorRow> rows, double gamma, uint64_t seed,
                          int lanes);
extern const char* kTailCsvHeader;

// 17-significant-digit formatting used for every serialized real.
std::string format_real(double v);

}  // namespace mdtk::mc
