#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ipkit/catalog.hpp"
#include "ipkit/errors.hpp"
#include "ipkit/families.hpp"
#include "ipkit/ins.hpp"
#include "ipkit/ipm.hpp"
#include "ipkit/problem.hpp"
#include "ipkit/trace.hpp"
#include "ipkit/util.hpp"

namespace ipkit {

// One solver run on one generated sample. lambda_opt is the equality
// multiplier y at termination. termination_test_strict means all residual
// norms and the gap ended at or below eps_tol; the relaxed variant allows
// a factor of ten.
struct BenchRow {
  int sample_id = 0;
  std::string algorithm;
  VectorXd x_opt;
  VectorXd lambda_opt;
  double f_opt = 0.0;
  long iterations = 0;
  long inner_iterations = 0;
  double accuracy = 0.0;
  double time_ms = 0.0;
  bool termination_test_strict = false;
  bool termination_test_relaxed = false;
  bool failed = false;  // solver threw; row kept so aggregates stay honest
};

struct Aggregates {
  double avg_f_opt = 0.0;
  double avg_iterations = 0.0;
  double avg_inner_iterations = 0.0;
  double avg_accuracy = 0.0;
  double avg_time_ms = 0.0;
  double pct_termination_strict = 0.0;
  double pct_termination_relaxed = 0.0;
};

struct BenchProtocol {
  int n_samples = 100;
  int n_variables = 2;
  int n_constraints = 1;
  std::string family = "simplex-qp";
  std::uint64_t base_seed = 42;
  int jobs = 1;
  bool keep_traces = true;
};

struct BenchmarkReport {
  BenchProtocol protocol;
  std::vector<std::string> algorithms;  // emission order
  std::vector<BenchRow> rows;           // ordered by (algorithm, sample_id)
  std::map<std::string, Aggregates> by_algorithm;
  std::vector<double> true_f;           // per sample
  std::vector<SolveTrace> traces;       // parallel to rows (empty when not kept)
};

namespace detail {

inline Aggregates aggregate_rows(const std::vector<BenchRow>& rows, const std::string& alg) {
  Aggregates a;
  long count = 0;
  for (const auto& r : rows) {
    if (r.algorithm != alg) continue;
    ++count;
    a.avg_f_opt += r.f_opt;
    a.avg_iterations += static_cast<double>(r.iterations);
    a.avg_inner_iterations += static_cast<double>(r.inner_iterations);
    a.avg_accuracy += r.accuracy;
    a.avg_time_ms += r.time_ms;
    a.pct_termination_strict += r.termination_test_strict ? 100.0 : 0.0;
    a.pct_termination_relaxed += r.termination_test_relaxed ? 100.0 : 0.0;
  }
  if (count > 0) {
    const double d = static_cast<double>(count);
    a.avg_f_opt /= d;
    a.avg_iterations /= d;
    a.avg_inner_iterations /= d;
    a.avg_accuracy /= d;
    a.avg_time_ms /= d;
    a.pct_termination_strict /= d;
    a.pct_termination_relaxed /= d;
  }
  return a;
}

inline void fill_termination_flags(BenchRow& row, const SolveResult& res, double eps_tol) {
  const auto under = [&](double factor) {
    return res.r_p_inf <= factor * eps_tol && res.r_d_inf <= factor * eps_tol &&
           res.mu_final <= factor * eps_tol;
  };
  row.termination_test_strict = under(1.0);
  row.termination_test_relaxed = under(10.0);
}

// Worker body: one sample, one algorithm. alg is "ins", "ins_bfgs" or "ipm".
inline void run_one(const GeneratedSample& sample, const std::string& alg,
                    const InsConfig& ins_cfg, const IpmConfig& ipm_cfg, int sample_id,
                    BenchRow& row, SolveTrace& trace) {
  row.sample_id = sample_id;
  row.algorithm = alg;
  trace.sample_id = sample_id;
  Stopwatch watch;
  try {
    if (alg == "ipm") {
      const SolveResult res = ipm_solve(sample.qp, ipm_cfg, &trace);
      row.time_ms = watch.elapsed_ms();
      row.x_opt = res.final.x;
      row.lambda_opt = res.final.y;
      row.f_opt = res.objective;
      row.iterations = res.iterations;
      row.inner_iterations = res.inner_iterations;
      fill_termination_flags(row, res, ipm_cfg.eps_tol);
    } else {
      InsConfig cfg = ins_cfg;
      cfg.hessian_mode = alg == "ins_bfgs" ? HessianMode::bfgs : HessianMode::exact;
      const SolveResult res = ins_solve(to_nlp(sample.qp), cfg, &trace);
      row.time_ms = watch.elapsed_ms();
      row.x_opt = res.final.x;
      row.lambda_opt = res.final.y;
      row.f_opt = res.objective;
      row.iterations = res.iterations;
      row.inner_iterations = res.inner_iterations;
      fill_termination_flags(row, res, cfg.eps_tol);
    }
    row.accuracy = accuracy_metric(row.f_opt, sample.f_star);
  } catch (const std::exception&) {
    row.time_ms = watch.elapsed_ms();
    row.failed = true;
    row.x_opt = VectorXd::Zero(sample.qp.n());
    row.lambda_opt = VectorXd::Zero(sample.qp.m());
    row.f_opt = std::numeric_limits<double>::quiet_NaN();
    row.accuracy = 0.0;
  }
}

}  // namespace detail

// Head-to-head protocol: every sample is generated once and solved by the
// Newton engine (exact Hessian), its quasi-Newton mode, and the interior-point
// engine, all from the same centered start. Samples run on a worker pool;
// determinism comes from per-sample seeds (base_seed + sample_id) and a
// reduction ordered by (algorithm, sample).
inline BenchmarkReport run_comparison(const BenchProtocol& protocol, const InsConfig& ins_cfg,
                                      const IpmConfig& ipm_cfg,
                                      std::vector<std::string> algorithms = {"ins", "ins_bfgs",
                                                                             "ipm"}) {
  if (protocol.n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (algorithms.empty()) throw ConfigError("algorithms must be non-empty");
  for (const auto& a : algorithms)
    if (a != "ins" && a != "ins_bfgs" && a != "ipm")
      throw ConfigError("unknown algorithm: " + a);
  validate_ins_config(ins_cfg);
  validate_ipm_config(ipm_cfg);

  BenchmarkReport report;
  report.protocol = protocol;
  report.algorithms = std::move(algorithms);
  const int ns = protocol.n_samples;
  const int total = ns * static_cast<int>(report.algorithms.size());
  report.rows.resize(total);
  report.traces.resize(total);
  report.true_f.resize(ns);

  std::vector<GeneratedSample> samples;
  samples.reserve(ns);
  for (int i = 0; i < ns; ++i) {
    SampleSpec spec;
    spec.sample_id = i;
    spec.n_variables = protocol.n_variables;
    spec.n_constraints = protocol.n_constraints;
    spec.seed = protocol.base_seed + static_cast<std::uint64_t>(i);
    spec.family = protocol.family;
    samples.push_back(generate_sample(spec));
    report.true_f[i] = samples.back().f_star;
  }

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int job = next.fetch_add(1);
      if (job >= total) return;
      const int alg_idx = job / ns;
      const int sid = job % ns;
      detail::run_one(samples[sid], report.algorithms[alg_idx], ins_cfg, ipm_cfg, sid,
                      report.rows[job], report.traces[job]);
    }
  };
  const int jobs = std::max(1, protocol.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& alg : report.algorithms)
    report.by_algorithm[alg] = detail::aggregate_rows(report.rows, alg);
  if (!protocol.keep_traces) report.traces.clear();
  return report;
}

// Sensitivity sweep per the stated grids. alpha and lambda are Newton-engine
// parameters (step damping and ridge); the interior-point engine consumes only
// eps, so its cells repeat across the other two axes and its variance there is
// exactly zero by construction.
struct SweepSpec {
  std::vector<double> alpha_grid = {0.1, 0.6, 1.0};
  std::vector<double> eps_grid = {1e-4, 1e-6, 1e-8};
  std::vector<double> lambda_grid = {1e-3, 1e-2, 1e-1};
  std::vector<std::string> algorithms = {"ins", "ipm"};
};

inline void validate_sweep_spec(const SweepSpec& s) {
  if (s.alpha_grid.empty() || s.eps_grid.empty() || s.lambda_grid.empty() ||
      s.algorithms.empty())
    throw ConfigError("sweep grids must be non-empty");
  for (double a : s.alpha_grid)
    if (!(a >= 0.1 && a <= 1.0)) throw ConfigError("alpha grid values must lie in [0.1, 1.0]");
  for (double e : s.eps_grid)
    if (e != 1e-4 && e != 1e-6 && e != 1e-8)
      throw ConfigError("eps grid values must come from {1e-4, 1e-6, 1e-8}");
  for (double l : s.lambda_grid)
    if (l != 1e-3 && l != 1e-2 && l != 1e-1)
      throw ConfigError("lambda grid values must come from {1e-3, 1e-2, 1e-1}");
  for (const auto& a : s.algorithms)
    if (a != "ins" && a != "ipm") throw ConfigError("sweep algorithms must be ins or ipm");
}

struct SweepCell {
  std::string algorithm;
  double alpha = 0.0, eps = 0.0, lambda = 0.0;
  double avg_iterations = 0.0;
  double avg_accuracy = 0.0;
  double pct_termination_strict = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  // variance of per-axis group means of avg_iterations, keyed [algorithm][axis]
  std::map<std::string, std::map<std::string, double>> stability;
};

namespace detail {

inline double variance_of_group_means(const std::vector<SweepCell>& cells,
                                      const std::string& alg,
                                      const std::function<double(const SweepCell&)>& axis) {
  std::map<double, std::pair<double, long>> groups;
  for (const auto& c : cells) {
    if (c.algorithm != alg) continue;
    auto& g = groups[axis(c)];
    g.first += c.avg_iterations;
    g.second += 1;
  }
  if (groups.size() < 2) return 0.0;
  std::vector<double> means;
  means.reserve(groups.size());
  for (const auto& [_, g] : groups) means.push_back(g.first / static_cast<double>(g.second));
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(means.size());
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  return var / static_cast<double>(means.size());
}

}  // namespace detail

inline SweepResult run_sensitivity(const SweepSpec& sweep, const BenchProtocol& protocol,
                                   const InsConfig& ins_base, const IpmConfig& ipm_base) {
  validate_sweep_spec(sweep);
  SweepResult out;
  BenchProtocol cell_protocol = protocol;
  cell_protocol.keep_traces = false;

  for (const auto& alg : sweep.algorithms) {
    for (double alpha : sweep.alpha_grid) {
      for (double eps : sweep.eps_grid) {
        for (double lambda : sweep.lambda_grid) {
          InsConfig ins_cfg = ins_base;
          IpmConfig ipm_cfg = ipm_base;
          ins_cfg.alpha_scale = alpha;
          ins_cfg.theta = lambda;
          ins_cfg.eps_tol = eps;
          ipm_cfg.eps_tol = eps;

          // One-algorithm run on the shared instance set.
          const BenchmarkReport rep = run_comparison(cell_protocol, ins_cfg, ipm_cfg, {alg});
          const Aggregates& agg = rep.by_algorithm.at(alg);
          SweepCell cell;
          cell.algorithm = alg;
          cell.alpha = alpha;
          cell.eps = eps;
          cell.lambda = lambda;
          cell.avg_iterations = agg.avg_iterations;
          cell.avg_accuracy = agg.avg_accuracy;
          cell.pct_termination_strict = agg.pct_termination_strict;
          out.cells.push_back(cell);
        }
      }
    }
  }

  for (const auto& alg : sweep.algorithms) {
    out.stability[alg]["alpha"] = detail::variance_of_group_means(
        out.cells, alg, [](const SweepCell& c) { return c.alpha; });
    out.stability[alg]["eps"] = detail::variance_of_group_means(
        out.cells, alg, [](const SweepCell& c) { return c.eps; });
    out.stability[alg]["lambda"] = detail::variance_of_group_means(
        out.cells, alg, [](const SweepCell& c) { return c.lambda; });
  }
  return out;
}

// ---- persistence ----

namespace detail {

inline std::string bool_cell(bool v) { return v ? "1" : "0"; }

inline std::string rows_csv(const BenchmarkReport& rep, const std::string& alg) {
  std::string out =
      "sample_id,x_opt,lambda_opt,f_opt,iterations,inner_iterations,accuracy,time_ms,"
      "termination_test_I\n";
  for (const auto& r : rep.rows) {
    if (r.algorithm != alg) continue;
    out += std::to_string(r.sample_id) + ",\"" + fmt_vector_g6(r.x_opt) + "\",\"" +
           fmt_vector_g6(r.lambda_opt) + "\"," + fmt_g6(r.f_opt) + "," +
           std::to_string(r.iterations) + "," + std::to_string(r.inner_iterations) + "," +
           fmt_g6(r.accuracy) + "," + fmt_g6(r.time_ms) + "," +
           bool_cell(r.termination_test_strict) + "\n";
  }
  return out;
}

inline const BenchRow& row_of(const BenchmarkReport& rep, const std::string& alg, int sid) {
  const int ns = rep.protocol.n_samples;
  for (size_t a = 0; a < rep.algorithms.size(); ++a)
    if (rep.algorithms[a] == alg) return rep.rows[a * ns + sid];
  throw ConfigError("unknown algorithm in report: " + alg);
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const BenchmarkReport& rep) {
  nlohmann::ordered_json j;
  j["protocol"] = {{"n_samples", rep.protocol.n_samples},
                   {"n_variables", rep.protocol.n_variables},
                   {"n_constraints", rep.protocol.n_constraints},
                   {"family", rep.protocol.family},
                   {"base_seed", rep.protocol.base_seed}};
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : rep.rows) {
    nlohmann::ordered_json e;
    e["sample_id"] = r.sample_id;
    e["algorithm"] = r.algorithm;
    e["x_opt"] = std::vector<double>(r.x_opt.data(), r.x_opt.data() + r.x_opt.size());
    e["lambda_opt"] =
        std::vector<double>(r.lambda_opt.data(), r.lambda_opt.data() + r.lambda_opt.size());
    e["f_opt"] = r.f_opt;
    e["iterations"] = r.iterations;
    e["inner_iterations"] = r.inner_iterations;
    e["accuracy"] = r.accuracy;
    e["time_ms"] = r.time_ms;
    e["termination_test_I"] = r.termination_test_strict;
    e["termination_test_relaxed"] = r.termination_test_relaxed;
    e["failed"] = r.failed;
    rows.push_back(std::move(e));
  }
  j["rows"] = std::move(rows);
  nlohmann::ordered_json aggs;
  for (const auto& alg : rep.algorithms) {
    const Aggregates& a = rep.by_algorithm.at(alg);
    nlohmann::ordered_json e;
    e["avg_f_opt"] = a.avg_f_opt;
    e["avg_iterations"] = a.avg_iterations;
    e["avg_inner_iterations"] = a.avg_inner_iterations;
    e["avg_accuracy"] = a.avg_accuracy;
    e["avg_time_ms"] = a.avg_time_ms;
    e["pct_termination_I"] = a.pct_termination_strict;
    e["pct_termination_relaxed"] = a.pct_termination_relaxed;
    aggs[alg] = std::move(e);
  }
  j["aggregates"] = std::move(aggs);
  j["true_f"] = rep.true_f;
  return j;
}

// Writes the full table set under run_dir: per-algorithm row tables, the
// wall-time table, the termination-rate table (strict plus 10x-relaxed, one
// row per contracted algorithm), the averages table, figure series, traces,
// and report.json.
inline void emit_tables(const BenchmarkReport& rep, const std::filesystem::path& run_dir) {
  ensure_directory(run_dir);
  const int ns = rep.protocol.n_samples;

  write_text_file(run_dir / "table2_ins.csv", detail::rows_csv(rep, "ins"));
  write_text_file(run_dir / "table2_ins_bfgs.csv", detail::rows_csv(rep, "ins_bfgs"));
  write_text_file(run_dir / "table3_ipm.csv", detail::rows_csv(rep, "ipm"));

  {
    std::string t4 = "sample_id,ins_ms,ins_bfgs_ms,ipm_ms\n";
    for (int i = 0; i < ns; ++i) {
      t4 += std::to_string(i) + "," + fmt_g6(detail::row_of(rep, "ins", i).time_ms) + "," +
            fmt_g6(detail::row_of(rep, "ins_bfgs", i).time_ms) + "," +
            fmt_g6(detail::row_of(rep, "ipm", i).time_ms) + "\n";
    }
    write_text_file(run_dir / "table4_times.csv", t4);
  }
  {
    std::string t5 = "algorithm,pct_termination_I,pct_termination_relaxed\n";
    for (const std::string alg : {"ins", "ipm"}) {
      const Aggregates& a = rep.by_algorithm.at(alg);
      t5 += alg + "," + fmt_g6(a.pct_termination_strict) + "," +
            fmt_g6(a.pct_termination_relaxed) + "\n";
    }
    write_text_file(run_dir / "table5_termination.csv", t5);
  }
  {
    std::string t6 = "metric,ins,ins_bfgs,ipm\n";
    const auto metric_row = [&](const std::string& name,
                                const std::function<double(const Aggregates&)>& get) {
      t6 += name;
      for (const auto& alg : rep.algorithms) t6 += "," + fmt_g6(get(rep.by_algorithm.at(alg)));
      t6 += "\n";
    };
    metric_row("avg_f_opt", [](const Aggregates& a) { return a.avg_f_opt; });
    metric_row("avg_iterations", [](const Aggregates& a) { return a.avg_iterations; });
    metric_row("avg_inner_iterations",
               [](const Aggregates& a) { return a.avg_inner_iterations; });
    metric_row("avg_accuracy", [](const Aggregates& a) { return a.avg_accuracy; });
    metric_row("avg_time_ms", [](const Aggregates& a) { return a.avg_time_ms; });
    metric_row("pct_termination_I",
               [](const Aggregates& a) { return a.pct_termination_strict; });
    write_text_file(run_dir / "table6_averages.csv", t6);
  }
  {
    std::string f1 = "sample_id,true_f,ins,ins_bfgs,ipm\n";
    std::string f2 = "sample_id,ins,ins_bfgs,ipm\n";
    for (int i = 0; i < ns; ++i) {
      f1 += std::to_string(i) + "," + fmt_g6(rep.true_f[i]);
      f2 += std::to_string(i);
      for (const auto& alg : rep.algorithms) {
        const BenchRow& r = detail::row_of(rep, alg, i);
        f1 += "," + fmt_g6(r.f_opt);
        f2 += "," + std::to_string(r.iterations);
      }
      f1 += "\n";
      f2 += "\n";
    }
    write_text_file(run_dir / "figures" / "fig1_fopt.csv", f1);
    write_text_file(run_dir / "figures" / "fig2_iterations.csv", f2);
  }
  if (!rep.traces.empty()) {
    for (size_t a = 0; a < rep.algorithms.size(); ++a) {
      for (int i = 0; i < ns; ++i) {
        const SolveTrace& t = rep.traces[a * ns + i];
        t.write_jsonl(run_dir / "traces" /
                      ("sample_" + std::to_string(i) + "_" + rep.algorithms[a] + ".jsonl"));
      }
    }
  }
  write_text_file(run_dir / "report.json", report_json(rep).dump(2) + "\n");
}

inline nlohmann::ordered_json sweep_json(const SweepResult& sw) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : sw.cells) {
    nlohmann::ordered_json e;
    e["algorithm"] = c.algorithm;
    e["alpha"] = c.alpha;
    e["eps"] = c.eps;
    e["lambda"] = c.lambda;
    e["avg_iterations"] = c.avg_iterations;
    e["avg_accuracy"] = c.avg_accuracy;
    e["pct_termination_I"] = c.pct_termination_strict;
    cells.push_back(std::move(e));
  }
  j["cells"] = std::move(cells);
  nlohmann::ordered_json st;
  for (const auto& [alg, axes] : sw.stability) {
    nlohmann::ordered_json e;
    for (const auto& [axis, var] : axes) e[axis] = var;
    st[alg] = std::move(e);
  }
  j["stability"] = std::move(st);
  return j;
}

inline void emit_sweep(const SweepResult& sw, const std::filesystem::path& run_dir) {
  ensure_directory(run_dir);
  std::string cells = "algorithm,alpha,eps,lambda,avg_iterations,avg_accuracy,pct_termination_I\n";
  for (const auto& c : sw.cells) {
    cells += c.algorithm + "," + fmt_g6(c.alpha) + "," + fmt_g6(c.eps) + "," + fmt_g6(c.lambda) +
             "," + fmt_g6(c.avg_iterations) + "," + fmt_g6(c.avg_accuracy) + "," +
             fmt_g6(c.pct_termination_strict) + "\n";
  }
  write_text_file(run_dir / "sweep_cells.csv", cells);

  std::string summary = "algorithm,axis,variance_avg_iterations\n";
  for (const auto& [alg, axes] : sw.stability)
    for (const auto& [axis, var] : axes)
      summary += alg + "," + axis + "," + fmt_g6(var) + "\n";
  write_text_file(run_dir / "sweep_summary.csv", summary);
  write_text_file(run_dir / "sweep.json", sweep_json(sw).dump(2) + "\n");
}

}  // namespace ipkit
