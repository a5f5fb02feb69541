#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mdtk/commands.hpp"
#include "mdtk/oracle.hpp"
#include "mdtk/specfun.hpp"

namespace {

using mdtk::Error;
using nlohmann::json;

struct CommonOpts {
  uint64_t seed = 1;
  uint64_t reps = 1000000;
  int lanes = 0;
  std::string output;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "RNG seed (64-bit)");
  cmd->add_option("--reps", opts.reps, "Monte Carlo repetitions");
  cmd->add_option("--lanes", opts.lanes,
                  "parallel lanes (0 = MDTK_DEFAULT_LANES or hardware)");
  cmd->add_option("--output", opts.output, "output path (default stdout)");
  cmd->add_option("--format", opts.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

struct PipelineFlags {
  std::vector<double> x_grid = {2.0, 2.5, 3.0, 3.5, 4.0};
  double c = 1.0;
  double c0 = 1.0;
  bool exact_moments = false;
  bool mc_moments = false;
  uint64_t moment_reps = 200000;
};

void add_pipeline(CLI::App* cmd, PipelineFlags& flags) {
  cmd->add_option("--x", flags.x_grid, "x grid (strictly increasing)")->delimiter(',');
  cmd->add_option("--C", flags.c, "theorem constant C (user-supplied)");
  cmd->add_option("--C0", flags.c0, "range constant C0 (user-supplied)");
  cmd->add_flag("--exact-moments", flags.exact_moments,
                "force exact moment enumeration (falls back to MC with a warning)");
  cmd->add_flag("--mc-moments", flags.mc_moments, "force Monte Carlo moments");
  cmd->add_option("--moment-reps", flags.moment_reps, "repetitions for MC moments");
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int emit_pipeline(const mdtk::apps::BuiltModel& built, mdtk::cli::PipelineOptions options,
                  const CommonOpts& common,
                  std::chrono::steady_clock::time_point start) {
  if (options.moments == mdtk::cli::PipelineOptions::MomentChoice::automatic &&
      built.sigma_method == mdtk::apps::SigmaMethod::monte_carlo) {
    std::cerr << "note: sigma for " << built.name
              << " is Monte Carlo estimated (no analytic or feasible exact route)\n";
  }
  const auto result = mdtk::cli::run_pipeline(built, options);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  const std::string manifest = mdtk::cli::manifest_json(
      options.subcommand, options.flags, options.seed, options.reps, options.lanes);
  std::string content = result.csv;
  if (common.format == "json") {
    content = mdtk::cli::tail_rows_json(result.estimates, result.rows, result.moments.gamma,
                                        options.seed, options.lanes, manifest,
                                        result.bound_json) +
              "\n";
  }
  mdtk::cli::write_output(common.output, content, manifest, elapsed_seconds(start));
  return mdtk::cli::kExitOk;
}

mdtk::cli::PipelineOptions make_pipeline_options(const std::string& subcommand,
                                                 const CommonOpts& common,
                                                 const PipelineFlags& flags,
                                                 std::map<std::string, std::string> extra) {
  if (flags.exact_moments && flags.mc_moments) {
    throw Error::domain("--exact-moments conflicts with --mc-moments");
  }
  mdtk::cli::PipelineOptions options;
  options.x_grid = flags.x_grid;
  options.reps = common.reps;
  options.seed = common.seed;
  options.lanes = mdtk::cli::resolve_lanes(common.lanes);
  options.c = flags.c;
  options.c0 = flags.c0;
  options.moment_reps = flags.moment_reps;
  if (flags.exact_moments) {
    options.moments = mdtk::cli::PipelineOptions::MomentChoice::exact;
  } else if (flags.mc_moments) {
    options.moments = mdtk::cli::PipelineOptions::MomentChoice::monte_carlo;
  }
  options.subcommand = subcommand;
  options.flags = std::move(extra);
  options.flags["seed"] = std::to_string(options.seed);
  options.flags["reps"] = std::to_string(options.reps);
  options.flags["lanes"] = std::to_string(options.lanes);
  options.flags["C"] = mdtk::mc::format_real(options.c);
  options.flags["C0"] = mdtk::mc::format_real(options.c0);
  return options;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mdtk: skewness-corrected tail approximations for sums of local statistics"};
  app.require_subcommand(1);
  const auto start = std::chrono::steady_clock::now();

  // --- table1 ---------------------------------------------------------------
  auto* cmd_table1 = app.add_subcommand(
      "table1", "reproduce the k-runs relative-error table (n=1500, k=2, p=0.25)");
  CommonOpts table1_common;
  add_common(cmd_table1, table1_common);

  // --- kruns ----------------------------------------------------------------
  auto* cmd_kruns = app.add_subcommand("kruns", "circular k-runs pipeline");
  CommonOpts kruns_common;
  PipelineFlags kruns_flags;
  uint64_t kruns_n = 1500;
  int kruns_k = 2;
  double kruns_p = 0.25;
  cmd_kruns->add_option("--n", kruns_n, "sequence length")->required();
  cmd_kruns->add_option("--k", kruns_k, "run length (1 < k < n)")->required();
  cmd_kruns->add_option("--p", kruns_p, "success probability")->required();
  add_common(cmd_kruns, kruns_common);
  add_pipeline(cmd_kruns, kruns_flags);

  // --- ustat ----------------------------------------------------------------
  auto* cmd_ustat = app.add_subcommand("ustat", "non-degenerate bounded U-statistic pipeline");
  CommonOpts ustat_common;
  PipelineFlags ustat_flags;
  int ustat_m = 0;
  int ustat_s = 2;
  std::string ustat_kernel = "product";
  std::string ustat_base = "bernoulli:0.5";
  double ustat_c1 = 0.0;
  bool ustat_allow_degenerate = false;
  cmd_ustat->add_option("--m", ustat_m, "sample size")->required();
  cmd_ustat->add_option("--s", ustat_s, "kernel order (>= 2)");
  cmd_ustat->add_option("--kernel", ustat_kernel, "builtin kernel (product)");
  cmd_ustat->add_option("--base", ustat_base,
                        "rademacher | bernoulli:p | centered-bernoulli:p");
  cmd_ustat->add_option("--c1", ustat_c1, "asserted a.s. kernel bound (0 = computed)");
  cmd_ustat->add_flag("--allow-degenerate", ustat_allow_degenerate,
                      "build even when E g^2(X_1) = 0");
  add_common(cmd_ustat, ustat_common);
  add_pipeline(cmd_ustat, ustat_flags);

  // --- subgraph ---------------------------------------------------------------
  auto* cmd_subgraph =
      app.add_subcommand("subgraph", "subgraph counts in the Erdos-Renyi graph");
  CommonOpts subgraph_common;
  PipelineFlags subgraph_flags;
  int subgraph_n = 0;
  double subgraph_p = 0.5;
  std::string subgraph_pattern = "triangle";
  cmd_subgraph->add_option("--N", subgraph_n, "number of vertices")->required();
  cmd_subgraph->add_option("--p", subgraph_p, "edge probability")->required();
  cmd_subgraph->add_option("--pattern", subgraph_pattern,
                           "edge | triangle | path:L | custom:<edge-list-file>");
  add_common(cmd_subgraph, subgraph_common);
  add_pipeline(cmd_subgraph, subgraph_flags);

  // --- moments ----------------------------------------------------------------
  auto* cmd_moments = app.add_subcommand("moments", "moment computation for a model file");
  CommonOpts moments_common;
  moments_common.reps = 200000;
  std::string moments_model;
  std::string moments_method = "auto";
  cmd_moments->add_option("--model", moments_model, "model description JSON file")->required();
  cmd_moments->add_option("--method", moments_method, "auto | exact | mc")
      ->check(CLI::IsMember({"auto", "exact", "mc"}));
  add_common(cmd_moments, moments_common);

  // --- tails ------------------------------------------------------------------
  auto* cmd_tails = app.add_subcommand("tails", "tail approximation values");
  double tails_x = 0.0;
  double tails_gamma = 0.0;
  std::string tails_kind = "normal";
  bool tails_json = false;
  cmd_tails->add_option("--x", tails_x, "evaluation point")->required();
  cmd_tails->add_option("--gamma", tails_gamma, "skewness parameter");
  cmd_tails->add_option("--kind", tails_kind, "normal | skew | poisson")
      ->check(CLI::IsMember({"normal", "skew", "poisson"}));
  cmd_tails->add_flag("--json", tails_json, "emit a JSON object");

  // --- bounds -----------------------------------------------------------------
  auto* cmd_bounds = app.add_subcommand("bounds", "theorem bound and range calculators");
  std::string bounds_family;
  double bounds_c = 1.0, bounds_c0 = 1.0, bounds_x = 0.0;
  uint64_t bounds_m = 0, bounds_n = 0, bounds_s = 0, bounds_d = 0;
  double bounds_delta = 0.0;
  int bounds_k = 2;
  double bounds_p = 0.5;
  int bounds_vertices = 0;
  std::string bounds_pattern = "triangle";
  cmd_bounds->add_option("--family", bounds_family, "theorem1 | kruns | ustat | subgraph")
      ->required()
      ->check(CLI::IsMember({"theorem1", "kruns", "ustat", "subgraph"}));
  cmd_bounds->add_option("--C", bounds_c, "constant C (user-supplied, default 1)");
  cmd_bounds->add_option("--C0", bounds_c0, "constant C0 (user-supplied, default 1)");
  cmd_bounds->add_option("--x", bounds_x, "evaluation point");
  cmd_bounds->add_option("--m", bounds_m, "theorem1/ustat: m");
  cmd_bounds->add_option("--n", bounds_n, "theorem1/kruns: n");
  cmd_bounds->add_option("--s", bounds_s, "theorem1/ustat: s");
  cmd_bounds->add_option("--d", bounds_d, "theorem1: d");
  cmd_bounds->add_option("--delta", bounds_delta, "theorem1: delta");
  cmd_bounds->add_option("--k", bounds_k, "kruns: run length");
  cmd_bounds->add_option("--p", bounds_p, "kruns/subgraph: probability");
  cmd_bounds->add_option("--N", bounds_vertices, "subgraph: vertex count");
  cmd_bounds->add_option("--pattern", bounds_pattern, "subgraph pattern");

  // --- oracle-check -------------------------------------------------------------
  auto* cmd_oracle = app.add_subcommand("oracle-check", "run the oracle cross-validation suite");
  CommonOpts oracle_common;
  add_common(cmd_oracle, oracle_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mdtk::cli::kExitValidation;
  }

  try {
    if (cmd_table1->parsed()) {
      const int lanes = mdtk::cli::resolve_lanes(table1_common.lanes);
      const auto result =
          mdtk::cli::run_table1(table1_common.reps, table1_common.seed, lanes);
      const std::map<std::string, std::string> flags = {
          {"reps", std::to_string(table1_common.reps)},
          {"seed", std::to_string(table1_common.seed)},
          {"lanes", std::to_string(lanes)}};
      const std::string manifest =
          mdtk::cli::manifest_json("table1", flags, table1_common.seed, table1_common.reps,
                                   lanes);
      mdtk::cli::write_output(table1_common.output, result.csv, manifest,
                              elapsed_seconds(start));
      return mdtk::cli::kExitOk;
    }

    if (cmd_kruns->parsed()) {
      auto options = make_pipeline_options(
          "kruns", kruns_common, kruns_flags,
          {{"n", std::to_string(kruns_n)},
           {"k", std::to_string(kruns_k)},
           {"p", mdtk::mc::format_real(kruns_p)}});
      const auto built = mdtk::apps::build_kruns(
          {kruns_n, kruns_k, kruns_p},
          {kruns_flags.moment_reps, kruns_common.seed + 2, options.lanes});
      if (built.sigma_method == mdtk::apps::SigmaMethod::monte_carlo) {
        options.flags["sigma"] = "estimated";
      }
      return emit_pipeline(built, options, kruns_common, start);
    }

    if (cmd_ustat->parsed()) {
      mdtk::apps::UStatSpec spec;
      spec.m = ustat_m;
      spec.s = ustat_s;
      spec.kernel = ustat_kernel;
      spec.allow_degenerate = ustat_allow_degenerate;
      if (ustat_c1 > 0.0) spec.c1 = ustat_c1;
      if (ustat_base == "rademacher") {
        spec.base = mdtk::apps::UStatBase::rademacher;
      } else if (ustat_base.rfind("bernoulli:", 0) == 0) {
        spec.base = mdtk::apps::UStatBase::bernoulli;
        spec.p = std::stod(ustat_base.substr(10));
      } else if (ustat_base.rfind("centered-bernoulli:", 0) == 0) {
        spec.base = mdtk::apps::UStatBase::centered_bernoulli;
        spec.p = std::stod(ustat_base.substr(19));
      } else {
        throw Error::domain("unknown base: " + ustat_base);
      }
      auto options = make_pipeline_options(
          "ustat", ustat_common, ustat_flags,
          {{"m", std::to_string(ustat_m)},
           {"s", std::to_string(ustat_s)},
           {"kernel", ustat_kernel},
           {"base", ustat_base}});
      const auto built = mdtk::apps::build_ustat(
          spec, {ustat_flags.moment_reps, ustat_common.seed + 2, options.lanes});
      return emit_pipeline(built, options, ustat_common, start);
    }

    if (cmd_subgraph->parsed()) {
      mdtk::apps::SubgraphSpec spec;
      spec.num_vertices = subgraph_n;
      spec.p = subgraph_p;
      spec.pattern = mdtk::cli::parse_pattern(subgraph_pattern);
      auto options = make_pipeline_options(
          "subgraph", subgraph_common, subgraph_flags,
          {{"N", std::to_string(subgraph_n)},
           {"p", mdtk::mc::format_real(subgraph_p)},
           {"pattern", subgraph_pattern}});
      const auto built = mdtk::apps::build_subgraph(
          spec, {subgraph_flags.moment_reps, subgraph_common.seed + 2, options.lanes});
      return emit_pipeline(built, options, subgraph_common, start);
    }

    if (cmd_moments->parsed()) {
      std::ifstream in(moments_model);
      if (!in) throw Error::io("cannot open model file: " + moments_model);
      std::stringstream buffer;
      buffer << in.rdbuf();
      const auto model = mdtk::model_from_json(buffer.str());
      const auto deps = mdtk::build_dependency(model);
      const int lanes = mdtk::cli::resolve_lanes(moments_common.lanes);

      json j;
      j["model"] = moments_model;
      j["n"] = model.num_summands();
      j["m"] = model.num_base();
      j["s"] = deps.s;
      j["d"] = deps.d;
      j["delta"] = model.delta();
      const bool want_exact = moments_method != "mc";
      bool did_exact = false;
      if (want_exact) {
        try {
          j["var_w"] = mdtk::moments::variance_exact(model, deps);
          j["gamma"] = mdtk::moments::gamma_exact(model, deps);
          j["method"] = "exact-enumeration";
          did_exact = true;
        } catch (const Error& e) {
          if (moments_method == "exact") throw;
          std::cerr << "note: exact moments infeasible (" << e.what()
                    << "); falling back to Monte Carlo\n";
        }
      }
      if (!did_exact) {
        const auto mc = mdtk::moments::moments_mc(model, moments_common.reps,
                                                  moments_common.seed, lanes);
        j["var_w"] = mc.var_w;
        j["gamma"] = mc.gamma;
        j["se_var"] = *mc.se_var;
        j["se_gamma"] = *mc.se_gamma;
        j["method"] = "monte-carlo";
        j["reps"] = moments_common.reps;
        j["seed"] = moments_common.seed;
      }
      const std::string manifest = mdtk::cli::manifest_json(
          "moments", {{"model", moments_model}, {"method", moments_method}},
          moments_common.seed, moments_common.reps, lanes);
      mdtk::cli::write_output(moments_common.output, j.dump(2) + "\n", manifest,
                              elapsed_seconds(start));
      return mdtk::cli::kExitOk;
    }

    if (cmd_tails->parsed()) {
      double value = 0.0;
      double log_value = 0.0;
      if (tails_kind == "normal") {
        value = mdtk::tails::normal_tail(tails_x);
        log_value = mdtk::tails::log_normal_tail(tails_x);
      } else if (tails_kind == "skew") {
        value = mdtk::tails::skew_corrected_tail(tails_x, tails_gamma);
        log_value = mdtk::tails::log_skew_corrected_tail(tails_x, tails_gamma);
      } else {
        value = mdtk::tails::standardized_poisson_tail(tails_x, tails_gamma);
        log_value = std::log(value);
      }
      if (tails_json) {
        json j;
        j["kind"] = tails_kind;
        j["x"] = tails_x;
        j["gamma"] = tails_gamma;
        j["value"] = value;
        j["log_value"] = log_value;
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << mdtk::mc::format_real(value) << '\n';
      }
      return mdtk::cli::kExitOk;
    }

    if (cmd_bounds->parsed()) {
      json j;
      j["family"] = bounds_family;
      j["C"] = bounds_c;
      j["C0"] = bounds_c0;
      j["constants_note"] = "C and C0 are user-supplied, not derived";
      if (bounds_family == "theorem1") {
        const mdtk::StructuralParams params{bounds_n, bounds_m, bounds_s, bounds_d,
                                            bounds_delta};
        const auto report = mdtk::tails::theorem1_bound(params, bounds_x, bounds_c, bounds_c0);
        j["bound_value"] = report.bound_value;
        j["x_max"] = report.x_max;
        j["x"] = bounds_x;
        j["x_in_range"] = report.x_in_range;
      } else if (bounds_family == "kruns") {
        if (bounds_k != 2) {
          throw Error::unsupported_method(
              "bounds --family kruns has a closed-form sigma only for k=2");
        }
        const double sigma2 = mdtk::moments::kruns_sigma2_analytic(bounds_n, bounds_p);
        const double sigma = std::sqrt(sigma2);
        const mdtk::StructuralParams params{bounds_n, bounds_n,
                                            static_cast<uint64_t>(bounds_k),
                                            static_cast<uint64_t>(bounds_k), 1.0 / sigma};
        const auto report = mdtk::tails::theorem1_bound(params, bounds_x, bounds_c, bounds_c0);
        const double k8 = std::pow(static_cast<double>(bounds_k), 8);
        j["sigma2"] = sigma2;
        j["gamma"] = mdtk::moments::kruns_gamma_analytic(bounds_n, bounds_p);
        j["bound_value"] = report.bound_value;
        j["x_max"] = report.x_max;
        j["x_max_closed_form"] =
            bounds_c0 * std::sqrt(std::pow(sigma, 5) /
                                  (static_cast<double>(bounds_n) * static_cast<double>(bounds_n) * k8));
        j["x_in_range"] = report.x_in_range;
      } else if (bounds_family == "ustat") {
        if (bounds_m == 0) throw Error::domain("ustat bounds need --m");
        const double md = static_cast<double>(bounds_m);
        j["x_max"] = bounds_c0 * std::pow(md, 0.25);
        j["bound_value"] = bounds_c / std::sqrt(md) * (1.0 + bounds_x * bounds_x);
        j["x"] = bounds_x;
        j["x_in_range"] = bounds_x >= 0.0 && bounds_x <= bounds_c0 * std::pow(md, 0.25);
      } else {  // subgraph
        const auto pattern = mdtk::cli::parse_pattern(bounds_pattern);
        const double nverts = static_cast<double>(bounds_vertices);
        const double psi = mdtk::tails::subgraph_psi(nverts, bounds_p, pattern);
        const double x_max =
            mdtk::tails::subgraph_range(nverts, bounds_p, pattern, bounds_c0);
        const double e = pattern.num_edges();
        const double log_bound = 2.5 * std::log(psi) - 2.5 * std::log1p(-bounds_p) -
                                 5.0 * e * std::log(bounds_p) - 6.0 * std::log(nverts);
        j["psi"] = psi;
        j["x_max"] = x_max;
        j["bound_value"] = bounds_c * std::exp(log_bound) * (1.0 + bounds_x * bounds_x);
        j["x"] = bounds_x;
        j["x_in_range"] = bounds_x >= 0.0 && bounds_x <= x_max;
        j["pattern"] = {{"vertices", pattern.num_vertices}, {"edges", pattern.num_edges()}};
      }
      std::cout << j.dump(2) << '\n';
      return mdtk::cli::kExitOk;
    }

    if (cmd_oracle->parsed()) {
      const auto result = mdtk::cli::run_oracle_check(oracle_common.seed);
      const std::string manifest = mdtk::cli::manifest_json(
          "oracle-check", {{"seed", std::to_string(oracle_common.seed)}}, oracle_common.seed,
          0, 1);
      mdtk::cli::write_output(oracle_common.output, result.report_json + "\n", manifest,
                              elapsed_seconds(start));
      return result.pass ? mdtk::cli::kExitOk : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mdtk::cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mdtk::cli::kExitValidation;
  }
  return mdtk::cli::kExitOk;
}
