#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdtk/applications.hpp"
#include "mdtk/common.hpp"
#include "mdtk/mc.hpp"
#include "mdtk/moments.hpp"
#include "mdtk/tails.hpp"

namespace mdtk::cli {

// Exit codes: 0 success, 2 validation failure, 3 unsupported size/method.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitUnsupported = 3;

int exit_code_for(const Error& e);

// Lane resolution: explicit flag > MDTK_DEFAULT_LANES > hardware concurrency.
int resolve_lanes(int requested);

// Deterministic manifest line embedded in outputs (volatile fields such as
// wall time go only to the sidecar file).
std::string manifest_json(const std::string& subcommand,
                          const std::map<std::string, std::string>& flags, uint64_t seed,
                          uint64_t reps, int lanes);

// Write content to path ("-" or empty for stdout) plus a <path>.manifest.json
// sidecar carrying the manifest and wall time.
void write_output(const std::string& path, const std::string& content,
                  const std::string& manifest_line, double wall_seconds);

struct Table1Cell {
  double value = 0.0;       // measured
  double paper = 0.0;       // published value
  double tolerance = 0.0;   // 0 when not asserted
  bool asserted = false;
  bool ok = true;           // true when not asserted or within tolerance
};

struct Table1Result {
  std::string csv;  // byte-deterministic for fixed (reps, seed, lanes)
  std::vector<mc::TailEstimate> estimates;
  std::vector<mc::RelativeErrorRow> rows;
  // cells[row][col], columns ordered L_N, L_skew, R_N, R_skew.
  std::vector<std::array<Table1Cell, 4>> cells;
  double gamma = 0.0;
  bool all_asserted_ok = true;
};

// The paper's k-runs experiment: n=1500, k=2, p=0.25, x in {2,2.5,3,3.5,4}.
Table1Result run_table1(uint64_t reps, uint64_t seed, int lanes);

struct PipelineOptions {
  std::vector<double> x_grid = {2.0, 2.5, 3.0, 3.5, 4.0};
  uint64_t reps = 1000000;
  uint64_t seed = 1;
  int lanes = 1;
  double c = 1.0;
  double c0 = 1.0;
  enum class MomentChoice { automatic, exact, monte_carlo } moments = MomentChoice::automatic;
  uint64_t moment_reps = 200000;
  std::string subcommand = "run";
  std::map<std::string, std::string> flags;  // echoed into the manifest
};

struct PipelineResult {
  std::string csv;         // mc-engine schema rows
  std::string bound_json;  // theorem-1 bound report at the largest grid x
  moments::MomentSummary moments;
  std::string moment_method;  // "analytic" | "exact-enumeration" | "monte-carlo"
  std::vector<std::string> warnings;
  std::vector<mc::TailEstimate> estimates;
  std::vector<mc::RelativeErrorRow> rows;
};

// build -> moments (analytic > exact > MC unless forced) -> estimate_tails ->
// relative_error_table -> bound report.
PipelineResult run_pipeline(const apps::BuiltModel& built, const PipelineOptions& options);

struct OracleCheckResult {
  std::string report_json;
  bool pass = false;
};

// Cross-validation suite: exact moments vs oracle on random tiny models,
// Monte Carlo coverage against oracle tails, sampler chi-square.
OracleCheckResult run_oracle_check(uint64_t seed);

// JSON mirror of the tail CSV rows (identical field names).
std::string tail_rows_json(std::span<const mc::TailEstimate> estimates,
                           std::span<const mc::RelativeErrorRow> rows, double gamma,
                           uint64_t seed, int lanes, const std::string& manifest_line,
                           const std::string& bound_json);

tails::PatternGraph parse_pattern(const std::string& text);

}  // namespace mdtk::cli
