// Command-line front end: solve, bench, sweep, verify, plot-data.
// Exit codes: 0 success, 1 usage or I/O error, 2 non-convergence,
// 3 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ipkit/bench.hpp"
#include "ipkit/catalog.hpp"
#include "ipkit/config.hpp"
#include "ipkit/ins.hpp"
#include "ipkit/ipm.hpp"
#include "ipkit/theory.hpp"
#include "ipkit/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitVerificationFailed = 3;

struct CliArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  int jobs = 0;
  std::string log_level = "info";

  // solve
  std::string catalog_name;
  std::string file_path;
  std::string algorithm = "ipm";
  double eps_override = -1.0;
  int max_iterations_override = -1;

  // bench
  int samples_override = -1;

  // verify / plot-data
  std::string trace_path;
  bool recursion_grid = false;
  std::string run_dir;
};

ipkit::RunConfig load_config(const CliArgs& args, bool sweep_defaults) {
  ipkit::RunConfig cfg;
  if (sweep_defaults) {
    // Sensitivity runs need headroom: a tight cap clips the slow cells and
    // flattens the very variance the sweep measures.
    cfg.ins.max_iterations = 3000;
    cfg.ipm.max_iterations = 3000;
  }
  if (!args.config_path.empty())
    ipkit::apply_config_text(cfg, ipkit::read_text_file(args.config_path));
  cfg.seed = args.seed;
  cfg.out_dir = args.out_dir;
  cfg.jobs = args.jobs;
  cfg.log_level = args.log_level;
  if (args.log_level == "debug") {
    cfg.ipm.log = &std::cerr;
    cfg.ins.log = &std::cerr;
  }
  ipkit::finalize_config(cfg);
  return cfg;
}

void info(const CliArgs& args, const std::string& msg) {
  if (args.log_level != "quiet") std::cerr << msg << "\n";
}

int cmd_solve(const CliArgs& args) {
  ipkit::RunConfig cfg = load_config(args, false);
  if (args.eps_override > 0.0) {
    cfg.ipm.eps_tol = args.eps_override;
    cfg.ins.eps_tol = args.eps_override;
  }
  if (args.max_iterations_override >= 0) {
    cfg.ipm.max_iterations = args.max_iterations_override;
    cfg.ins.max_iterations = args.max_iterations_override;
  }

  const bool want_ipm = args.algorithm == "ipm" || args.algorithm == "ipm-short";
  ipkit::SolveTrace trace;
  ipkit::SolveResult res;
  std::string label = args.algorithm;

  if (!args.catalog_name.empty()) {
    const ipkit::QpEntry* qp = ipkit::find_qp(args.catalog_name);
    const ipkit::NlpEntry* nlp = qp ? nullptr : ipkit::find_nlp(args.catalog_name);
    if (!qp && !nlp) {
      std::cerr << "unknown catalog entry: " << args.catalog_name << " (available:";
      for (const auto& n : ipkit::catalog_names()) std::cerr << " " << n;
      std::cerr << ")\n";
      return kExitError;
    }
    if (want_ipm) {
      if (!qp) {
        std::cerr << "algorithm " << args.algorithm << " requires a quadratic catalog entry\n";
        return kExitError;
      }
      if (args.algorithm == "ipm-short") cfg.ipm.variant = ipkit::IpmVariant::short_step;
      res = ipkit::ipm_solve(qp->qp, cfg.ipm, &trace);
    } else {
      if (args.algorithm == "ins-bfgs") cfg.ins.hessian_mode = ipkit::HessianMode::bfgs;
      res = qp ? ipkit::ins_solve(ipkit::to_nlp(qp->qp), cfg.ins, &trace)
               : ipkit::ins_solve(nlp->nlp, cfg.ins, &trace);
    }
  } else {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ipkit::read_text_file(args.file_path));
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "cannot parse " << args.file_path << ": " << e.what() << "\n";
      return kExitError;
    }
    const ipkit::QuadraticProgram qp = ipkit::qp_from_json(j);
    if (want_ipm) {
      if (args.algorithm == "ipm-short") cfg.ipm.variant = ipkit::IpmVariant::short_step;
      res = ipkit::ipm_solve(qp, cfg.ipm, &trace);
    } else {
      if (args.algorithm == "ins-bfgs") cfg.ins.hessian_mode = ipkit::HessianMode::bfgs;
      res = ipkit::ins_solve(ipkit::to_nlp(qp), cfg.ins, &trace);
    }
  }

  const std::filesystem::path out(cfg.out_dir);
  trace.algorithm = want_ipm ? "ipm" : "ins";
  trace.write_jsonl(out / "solve_trace.jsonl");
  trace.write_csv(out / "solve_trace.csv");

  double total_ms = 0.0;
  for (const auto& r : trace.records) total_ms += r.wall_ms;
  const bool converged = res.status == ipkit::TerminationStatus::converged;
  std::cout << "algorithm=" << label << " status=" << (converged ? "converged" : "max-iterations")
            << " iterations=" << res.iterations << " mu_final=" << ipkit::fmt_g6(res.mu_final)
            << " objective=" << ipkit::fmt_g6(res.objective)
            << " time_ms=" << ipkit::fmt_g6(total_ms) << "\n";
  return converged ? kExitOk : kExitNoConvergence;
}

int cmd_bench(const CliArgs& args) {
  ipkit::RunConfig cfg = load_config(args, false);
  if (args.samples_override > 0) cfg.bench.n_samples = args.samples_override;
  info(args, "bench: " + std::to_string(cfg.bench.n_samples) + " samples of " + cfg.bench.family);
  const ipkit::BenchmarkReport rep = ipkit::run_comparison(cfg.bench, cfg.ins, cfg.ipm);
  ipkit::emit_tables(rep, cfg.out_dir);
  for (const auto& alg : rep.algorithms) {
    const ipkit::Aggregates& a = rep.by_algorithm.at(alg);
    info(args, "  " + alg + ": avg_iterations=" + ipkit::fmt_g6(a.avg_iterations) +
                   " pct_termination_I=" + ipkit::fmt_g6(a.pct_termination_strict));
  }
  info(args, "bench: wrote " + cfg.out_dir.string());
  return kExitOk;
}

int cmd_sweep(const CliArgs& args) {
  ipkit::RunConfig cfg = load_config(args, true);
  if (args.samples_override > 0) cfg.bench.n_samples = args.samples_override;
  info(args, "sweep: " + std::to_string(cfg.sweep.alpha_grid.size() * cfg.sweep.eps_grid.size() *
                                        cfg.sweep.lambda_grid.size() *
                                        cfg.sweep.algorithms.size()) +
                 " cells");
  const ipkit::SweepResult sw = ipkit::run_sensitivity(cfg.sweep, cfg.bench, cfg.ins, cfg.ipm);
  ipkit::emit_sweep(sw, cfg.out_dir);
  info(args, "sweep: wrote " + cfg.out_dir.string());
  return kExitOk;
}

int cmd_verify(const CliArgs& args) {
  ipkit::RunConfig cfg = load_config(args, false);
  nlohmann::ordered_json verdict;
  bool ok = false;
  if (args.recursion_grid) {
    const ipkit::GridVerdict v = ipkit::contraction_grid_verdict();
    verdict = ipkit::grid_verdict_json(v);
    ok = v.all_ok;
  } else {
    const ipkit::SolveTrace trace = ipkit::SolveTrace::read_jsonl(args.trace_path);
    const ipkit::GapCheckResult res = ipkit::check_gap_steps(trace);
    verdict = ipkit::gap_check_json(res);
    ok = res.all_ok;
  }
  ipkit::write_text_file(std::filesystem::path(cfg.out_dir) / "verdict.json",
                         verdict.dump(2) + "\n");
  std::cout << (ok ? "verified" : "verification failed") << ": " << verdict["check"].get<std::string>()
            << "\n";
  return ok ? kExitOk : kExitVerificationFailed;
}

int cmd_plot_data(const CliArgs& args) {
  ipkit::RunConfig cfg = load_config(args, false);
  const std::filesystem::path out(cfg.out_dir);
  if (!args.trace_path.empty()) {
    const ipkit::SolveTrace trace = ipkit::SolveTrace::read_jsonl(args.trace_path);
    trace.write_csv(out / "trace_rows.csv");
    info(args, "plot-data: wrote " + (out / "trace_rows.csv").string());
    return kExitOk;
  }
  // Rebuild figure series from a completed run directory's report.
  const nlohmann::json rep =
      nlohmann::json::parse(ipkit::read_text_file(std::filesystem::path(args.run_dir) / "report.json"));
  const auto& rows = rep.at("rows");
  const auto& true_f = rep.at("true_f");
  const int ns = rep.at("protocol").at("n_samples").get<int>();
  std::map<std::string, std::vector<const nlohmann::json*>> by_alg;
  for (const auto& r : rows) by_alg[r.at("algorithm").get<std::string>()].push_back(&r);
  const std::vector<std::string> algs = {"ins", "ins_bfgs", "ipm"};
  for (const auto& a : algs)
    if (by_alg.count(a) && static_cast<int>(by_alg[a].size()) != ns)
      throw ipkit::IncompleteTrace("report rows truncated for " + a);
  std::string f1 = "sample_id,true_f,ins,ins_bfgs,ipm\n";
  std::string f2 = "sample_id,ins,ins_bfgs,ipm\n";
  for (int i = 0; i < ns; ++i) {
    f1 += std::to_string(i) + "," + ipkit::fmt_g6(true_f.at(i).get<double>());
    f2 += std::to_string(i);
    for (const auto& a : algs) {
      f1 += "," + ipkit::fmt_g6(by_alg.at(a)[i]->at("f_opt").is_null()
                                    ? std::numeric_limits<double>::quiet_NaN()
                                    : by_alg.at(a)[i]->at("f_opt").get<double>());
      f2 += "," + std::to_string(by_alg.at(a)[i]->at("iterations").get<long>());
    }
    f1 += "\n";
    f2 += "\n";
  }
  ipkit::write_text_file(out / "figures" / "fig1_fopt.csv", f1);
  ipkit::write_text_file(out / "figures" / "fig2_iterations.csv", f2);
  info(args, "plot-data: wrote " + (out / "figures").string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CliArgs args;
  CLI::App app{"interior-point and inexact-Newton optimization toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--config", args.config_path, "configuration file (key = value lines)");
  app.add_option("--seed", args.seed, "base seed for instance generation");
  app.add_option("--out", args.out_dir, "output directory");
  app.add_option("--jobs", args.jobs, "worker pool size (0 = logical cores)");
  app.add_option("--log-level", args.log_level, "quiet | info | debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));

  CLI::App* solve = app.add_subcommand("solve", "solve one problem and write its trace");
  CLI::Option* opt_catalog = solve->add_option("--catalog", args.catalog_name, "catalog entry name");
  CLI::Option* opt_file = solve->add_option("--file", args.file_path, "problem JSON file");
  opt_catalog->excludes(opt_file);
  solve->add_option("--alg", args.algorithm, "ipm | ipm-short | ins | ins-bfgs")
      ->check(CLI::IsMember({"ipm", "ipm-short", "ins", "ins-bfgs"}));
  solve->add_option("--eps", args.eps_override, "termination tolerance override");
  solve->add_option("--max-iterations", args.max_iterations_override, "iteration cap override");

  CLI::App* bench = app.add_subcommand("bench", "run the head-to-head comparison protocol");
  bench->add_option("--samples", args.samples_override, "sample count override");

  CLI::App* sweep = app.add_subcommand("sweep", "run the parameter sensitivity sweep");
  sweep->add_option("--samples", args.samples_override, "sample count override");

  CLI::App* verify = app.add_subcommand("verify", "check recorded solves against the gap recursion");
  CLI::Option* opt_trace = verify->add_option("--trace", args.trace_path, "trace JSONL to check");
  CLI::Option* opt_grid =
      verify->add_flag("--recursion-grid", args.recursion_grid,
                       "verify the contraction bound and iteration estimate on the built-in grid");
  opt_trace->excludes(opt_grid);

  CLI::App* plot = app.add_subcommand("plot-data", "export plot-ready CSV series");
  CLI::Option* opt_ptrace = plot->add_option("--trace", args.trace_path, "trace JSONL to tabulate");
  CLI::Option* opt_run = plot->add_option("--run", args.run_dir, "completed bench run directory");
  opt_ptrace->excludes(opt_run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (solve->parsed()) {
      if (args.catalog_name.empty() == args.file_path.empty()) {
        std::cerr << "solve: exactly one of --catalog or --file is required\n";
        return kExitError;
      }
      return cmd_solve(args);
    }
    if (bench->parsed()) return cmd_bench(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (verify->parsed()) {
      if (args.trace_path.empty() && !args.recursion_grid) {
        std::cerr << "verify: one of --trace or --recursion-grid is required\n";
        return kExitError;
      }
      return cmd_verify(args);
    }
    if (plot->parsed()) {
      if (args.trace_path.empty() == args.run_dir.empty()) {
        std::cerr << "plot-data: exactly one of --trace or --run is required\n";
        return kExitError;
      }
      return cmd_plot_data(args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
