#include "mdtk/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "mdtk/common.hpp"
#include "mdtk/tails.hpp"

namespace mdtk::mc {

namespace {

constexpr double kZ95 = 1.959963984540054;  // Phi^{-1}(0.975)
constexpr int kMgfBatches = 64;
constexpr int kBootstrapResamples = 200;

void validate_grid(std::span<const double> grid) {
  if (grid.empty()) throw Error::domain("x grid must be nonempty");
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw Error::domain("x grid values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw Error::domain("x grid must be strictly increasing");
    }
  }
}

// Streaming log-sum-exp accumulator.
struct LogSumExp {
  double max_exponent = -std::numeric_limits<double>::infinity();
  double scaled_sum = 0.0;

  void add(double exponent) {
    if (exponent <= max_exponent) {
      scaled_sum += std::exp(exponent - max_exponent);
    } else {
      scaled_sum = scaled_sum * std::exp(max_exponent - exponent) + 1.0;
      max_exponent = exponent;
    }
  }

  double value() const { return max_exponent + std::log(scaled_sum); }
};

}  // namespace

WilsonInterval wilson_interval(uint64_t count, uint64_t reps, double z) {
  if (reps == 0) throw Error::domain("wilson interval needs reps >= 1");
  const double n = static_cast<double>(reps);
  const double p = static_cast<double>(count) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

TailCounts estimate_tail_counts(const Sampler& sampler, std::span<const double> x_grid,
                                uint64_t rep_begin, uint64_t rep_end, uint64_t seed,
                                int lanes) {
  validate_grid(x_grid);
  if (lanes < 1) throw Error::domain("lanes must be >= 1");
  if (rep_end < rep_begin) throw Error::domain("rep range is reversed");
  const size_t g = x_grid.size();
  const uint64_t total = rep_end - rep_begin;

  // Per-sample work is one binary search: bucket[b] counts samples whose
  // W exceeds exactly the first b grid points; suffix sums give the counters.
  struct LaneHist {
    std::vector<uint64_t> right, left;
  };
  std::vector<LaneHist> hists(static_cast<size_t>(lanes),
                              {std::vector<uint64_t>(g + 1, 0), std::vector<uint64_t>(g + 1, 0)});
  {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(lanes));
    for (int lane = 0; lane < lanes; ++lane) {
      const uint64_t begin = rep_begin + total * static_cast<uint64_t>(lane) /
                                             static_cast<uint64_t>(lanes);
      const uint64_t end = rep_begin + total * static_cast<uint64_t>(lane + 1) /
                                           static_cast<uint64_t>(lanes);
      workers.emplace_back([&, lane, begin, end]() {
        auto& h = hists[static_cast<size_t>(lane)];
        for (uint64_t rep = begin; rep < end; ++rep) {
          RepDraws draws(seed, rep);
          const double w = sampler(draws);
          const auto rb = static_cast<size_t>(
              std::lower_bound(x_grid.begin(), x_grid.end(), w) - x_grid.begin());
          const auto lb = static_cast<size_t>(
              std::lower_bound(x_grid.begin(), x_grid.end(), -w) - x_grid.begin());
          ++h.right[rb];
          ++h.left[lb];
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  TailCounts counts;
  counts.reps = total;
  counts.right.assign(g, 0);
  counts.left.assign(g, 0);
  // Merge lanes in lane order, then convert buckets to tail counters:
  // W > x_i iff the sample's bucket index exceeds i.
  std::vector<uint64_t> right_buckets(g + 1, 0), left_buckets(g + 1, 0);
  for (const auto& h : hists) {
    for (size_t b = 0; b <= g; ++b) {
      right_buckets[b] += h.right[b];
      left_buckets[b] += h.left[b];
    }
  }
  uint64_t acc_r = 0, acc_l = 0;
  for (size_t i = g; i-- > 0;) {
    acc_r += right_buckets[i + 1];
    acc_l += left_buckets[i + 1];
    counts.right[i] = acc_r;
    counts.left[i] = acc_l;
  }
  return counts;
}

std::vector<TailEstimate> estimate_tails(const Sampler& sampler,
                                         const ExperimentConfig& config) {
  if (config.reps == 0) throw Error::domain("reps must be >= 1");
  const auto counts =
      estimate_tail_counts(sampler, config.x_grid, 0, config.reps, config.seed, config.lanes);
  std::vector<TailEstimate> out(config.x_grid.size());
  for (size_t i = 0; i < config.x_grid.size(); ++i) {
    auto& e = out[i];
    e.x = config.x_grid[i];
    e.count_right = counts.right[i];
    e.count_left = counts.left[i];
    e.reps = config.reps;
    e.p_right = static_cast<double>(e.count_right) / static_cast<double>(config.reps);
    e.p_left = static_cast<double>(e.count_left) / static_cast<double>(config.reps);
    const auto wr = wilson_interval(e.count_right, config.reps, kZ95);
    const auto wl = wilson_interval(e.count_left, config.reps, kZ95);
    e.ci_right_lo = wr.lo;
    e.ci_right_hi = wr.hi;
    e.ci_left_lo = wl.lo;
    e.ci_left_hi = wl.hi;
  }
  return out;
}

std::vector<RelativeErrorRow> relative_error_table(std::span<const TailEstimate> estimates,
                                                   double gamma) {
  if (!std::isfinite(gamma)) throw Error::domain("gamma must be finite");
  std::vector<RelativeErrorRow> rows(estimates.size());
  for (size_t i = 0; i < estimates.size(); ++i) {
    const auto& e = estimates[i];
    auto& r = rows[i];
    r.x = e.x;
    const double phi_bar = tails::normal_tail(e.x);          // 1 - Phi(x) = Phi(-x)
    const double right_skew = tails::skew_corrected_tail(e.x, gamma);
    const double left_skew = tails::skew_corrected_tail(e.x, -gamma);
    r.r_n = e.p_right / phi_bar - 1.0;
    r.r_skew = e.p_right / right_skew - 1.0;
    r.l_n = e.p_left / phi_bar - 1.0;
    r.l_skew = e.p_left / left_skew - 1.0;
    const double hw_right = 0.5 * (e.ci_right_hi - e.ci_right_lo);
    const double hw_left = 0.5 * (e.ci_left_hi - e.ci_left_lo);
    r.r_n_hw = hw_right / phi_bar;
    r.r_skew_hw = hw_right / right_skew;
    r.l_n_hw = hw_left / phi_bar;
    r.l_skew_hw = hw_left / left_skew;
  }
  return rows;
}

MgfReport mgf_check(const Sampler& sampler, std::span<const double> t_grid, uint64_t reps,
                    uint64_t seed, int lanes, double gamma, double t_max_guideline) {
  if (t_grid.empty()) throw Error::domain("t grid must be nonempty");
  if (reps < static_cast<uint64_t>(kMgfBatches)) {
    throw Error::domain("mgf_check needs at least 64 reps");
  }
  if (lanes < 1) throw Error::domain("lanes must be >= 1");
  const size_t nt = t_grid.size();

  // Fixed logical batches (independent of lane count) hold streaming
  // log-sum-exp partials of e^{tW}; batches are assigned to lanes wholesale.
  std::vector<std::vector<LogSumExp>> batch(static_cast<size_t>(kMgfBatches),
                                            std::vector<LogSumExp>(nt));
  std::vector<uint64_t> batch_size(static_cast<size_t>(kMgfBatches), 0);
  {
    std::vector<std::thread> workers;
    for (int lane = 0; lane < lanes; ++lane) {
      const int b_begin = kMgfBatches * lane / lanes;
      const int b_end = kMgfBatches * (lane + 1) / lanes;
      workers.emplace_back([&, b_begin, b_end]() {
        for (int b = b_begin; b < b_end; ++b) {
          const uint64_t begin = reps * static_cast<uint64_t>(b) / kMgfBatches;
          const uint64_t end = reps * static_cast<uint64_t>(b + 1) / kMgfBatches;
          batch_size[static_cast<size_t>(b)] = end - begin;
          for (uint64_t rep = begin; rep < end; ++rep) {
            RepDraws draws(seed, rep);
            const double w = sampler(draws);
            for (size_t ti = 0; ti < nt; ++ti) {
              batch[static_cast<size_t>(b)][ti].add(t_grid[ti] * w);
            }
          }
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  MgfReport report;
  report.reps = reps;
  report.seed = seed;
  report.lanes = lanes;
  report.t_max = t_max_guideline;
  report.points.resize(nt);

  std::vector<double> resample_log(static_cast<size_t>(kBootstrapResamples));
  for (size_t ti = 0; ti < nt; ++ti) {
    auto& pt = report.points[ti];
    pt.t = t_grid[ti];
    pt.reference = 0.5 * pt.t * pt.t + gamma * pt.t * pt.t * pt.t / 6.0;
    pt.in_range = std::abs(pt.t) <= t_max_guideline;

    LogSumExp full;
    for (int b = 0; b < kMgfBatches; ++b) {
      full.add(batch[static_cast<size_t>(b)][ti].value());
    }
    pt.log_mgf = full.value() - std::log(static_cast<double>(reps));
    pt.discrepancy = pt.log_mgf - pt.reference;

    // Bootstrap over batches; the resampling stream is an auxiliary rep so it
    // never collides with sample reps.
    RepDraws boot(seed, kAuxStreamBase + ti);
    for (int r = 0; r < kBootstrapResamples; ++r) {
      LogSumExp resampled;
      uint64_t size = 0;
      for (int b = 0; b < kMgfBatches; ++b) {
        const auto pick = static_cast<int>(boot.next_unit() * kMgfBatches);
        resampled.add(batch[static_cast<size_t>(pick)][ti].value());
        size += batch_size[static_cast<size_t>(pick)];
      }
      resample_log[static_cast<size_t>(r)] =
          resampled.value() - std::log(static_cast<double>(size));
    }
    double mean = 0.0;
    for (double v : resample_log) mean += v;
    mean /= kBootstrapResamples;
    double var = 0.0;
    for (double v : resample_log) var += (v - mean) * (v - mean);
    pt.se = std::sqrt(var / (kBootstrapResamples - 1));
  }
  return report;
}

const char* kTailCsvHeader =
    "x,p_left,p_right,ci_left_lo,ci_left_hi,ci_right_lo,ci_right_hi,"
    "L_N,L_skew,R_N,R_skew,gamma,reps,seed,lanes,rng_id";

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string tail_rows_csv(std::span<const TailEstimate> estimates,
                          std::span<const RelativeErrorRow> rows, double gamma, uint64_t seed,
                          int lanes) {
  std::string out;
  for (size_t i = 0; i < estimates.size(); ++i) {
    const auto& e = estimates[i];
    const auto& r = rows[i];
    out += format_real(e.x);
    out += ',';
    out += format_real(e.p_left);
    out += ',';
    out += format_real(e.p_right);
    out += ',';
    out += format_real(e.ci_left_lo);
    out += ',';
    out += format_real(e.ci_left_hi);
    out += ',';
    out += format_real(e.ci_right_lo);
    out += ',';
    out += format_real(e.ci_right_hi);
    out += ',';
    out += format_real(r.l_n);
    out += ',';
    out += format_real(r.l_skew);
    out += ',';
    out += format_real(r.r_n);
    out += ',';
    out += format_real(r.r_skew);
    out += ',';
    out += format_real(gamma);
    out += ',';
    out += std::to_string(e.reps);
    out += ',';
    out += std::to_string(seed);
    out += ',';
    out += std::to_string(lanes);
    out += ',';
    out += kRngId;
    out += '\n';
  }
  return out;
}

}  // namespace mdtk::mc
