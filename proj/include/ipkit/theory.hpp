#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipkit/errors.hpp"
#include "ipkit/ipm.hpp"
#include "ipkit/problem.hpp"
#include "ipkit/trace.hpp"

namespace ipkit {

// Scalar gap recursion mu_{k+1} = (1 - omega) mu_k + C mu_k^2. When
// mu0 < omega / C the sequence contracts at least geometrically with ratio
// r = 1 - omega + C mu0; the verifiers below check that bound empirically.
struct RecursionParams {
  double omega = 0.5;
  double C = 0.0;
  double mu0 = 1.0;
  int horizon = 200;
};

inline void validate_recursion_params(const RecursionParams& p) {
  if (!(p.omega > 0.0 && p.omega < 1.0)) throw ConfigError("omega must lie in (0,1)");
  if (!(p.C >= 0.0)) throw ConfigError("C must be nonnegative");
  if (!(p.mu0 > 0.0)) throw ConfigError("mu0 must be positive");
  if (p.horizon < 1) throw ConfigError("horizon must be >= 1");
}

// Returns mu_0 .. mu_horizon generated with equality.
inline std::vector<double> simulate_gap_recursion(const RecursionParams& p) {
  validate_recursion_params(p);
  std::vector<double> mu(static_cast<size_t>(p.horizon) + 1);
  mu[0] = p.mu0;
  for (int k = 0; k < p.horizon; ++k) mu[k + 1] = (1.0 - p.omega) * mu[k] + p.C * mu[k] * mu[k];
  return mu;
}

struct ContractionCheck {
  std::vector<bool> per_index;
  int first_violation = -1;  // -1 when every index passes
  double ratio = 0.0;        // 1 - omega + C mu0
  bool all_ok = true;
};

// Verifies mu_k <= (1 - omega + C mu0)^k mu0 for every index of a sequence.
// Applicability requires mu0 < omega / C (vacuous for C = 0); outside it the
// bound says nothing and the check refuses to run.
inline ContractionCheck check_contraction_bound(const std::vector<double>& mu_seq, double omega,
                                                double C, double rel_tol = 1e-12) {
  if (mu_seq.empty()) throw ConfigError("empty sequence");
  if (!(omega > 0.0 && omega < 1.0)) throw ConfigError("omega must lie in (0,1)");
  if (!(C >= 0.0)) throw ConfigError("C must be nonnegative");
  const double mu0 = mu_seq[0];
  if (!(mu0 > 0.0)) throw ConfigError("mu0 must be positive");
  if (C > 0.0 && mu0 >= omega / C)
    throw HypothesisUnmet("mu0 >= omega / C: contraction bound not applicable");

  ContractionCheck out;
  out.ratio = 1.0 - omega + C * mu0;
  out.per_index.resize(mu_seq.size());
  double bound = mu0;
  for (size_t k = 0; k < mu_seq.size(); ++k) {
    const bool ok = mu_seq[k] <= bound * (1.0 + rel_tol);
    out.per_index[k] = ok;
    if (!ok && out.first_violation < 0) {
      out.first_violation = static_cast<int>(k);
      out.all_ok = false;
    }
    bound *= out.ratio;
  }
  return out;
}

// Smallest k with r^k mu0 <= eps for the geometric envelope r = 1-omega+C mu0,
// i.e. ceil(log(eps/mu0) / log r). The true recursion only runs ahead of the
// envelope, so simulating that many steps always lands at or below eps.
inline int contraction_iteration_estimate(double omega, double C, double mu0, double eps) {
  if (!(omega > 0.0 && omega < 1.0)) throw ConfigError("omega must lie in (0,1)");
  if (!(C >= 0.0)) throw ConfigError("C must be nonnegative");
  if (!(mu0 > 0.0)) throw ConfigError("mu0 must be positive");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (C > 0.0 && mu0 >= omega / C)
    throw HypothesisUnmet("mu0 >= omega / C: no contraction guarantee");
  if (eps >= mu0) return 0;
  const double ratio = 1.0 - omega + C * mu0;
  return static_cast<int>(std::ceil(std::log(eps / mu0) / std::log(ratio)));
}

// Per-step verification of the gap recursion on a recorded solve. With the
// measured kappa1 = |e'r| / (n mu) and kappa2 = |dx'ds| / (n mu^2), every
// honestly recorded step satisfies both
//   identity:  mu_next = (1 - a(1-s)) mu + (a/n) e'r + (a^2/n) dx'ds
//   bound:     mu_next <= (1 - a(1 - s - kappa1)) mu + a^2 kappa2 mu^2
// since the bound is the identity plus two triangle inequalities.
struct GapStepCheck {
  int k = 0;
  double mu = 0.0, mu_next = 0.0, alpha = 0.0, sigma = 0.0;
  double kappa1_hat = 0.0, kappa2_hat = 0.0;
  double identity_rel_err = 0.0;
  double bound_value = 0.0;
  bool identity_ok = false;
  bool bound_ok = false;
  bool hypothesis_ok = false;  // sigma + kappa1 < 1
};

struct GapCheckResult {
  std::vector<GapStepCheck> steps;
  int first_violation = -1;
  double kappa1_max = 0.0;
  double kappa2_max = 0.0;
  int skipped = 0;  // equality-phase or zero-gap records
  bool all_ok = true;
};

inline GapCheckResult check_gap_steps(const SolveTrace& trace, double rel_tol = 1e-10) {
  GapCheckResult out;
  for (const TraceRecord& r : trace.records) {
    if (r.phase != "interior") {
      ++out.skipped;
      continue;
    }
    if (std::isnan(r.mu_next) || std::isnan(r.sigma) || std::isnan(r.e_dot_r) ||
        std::isnan(r.dx_dot_ds))
      throw IncompleteTrace("record " + std::to_string(r.k) +
                            " lacks recursion fields (mu_next/sigma/e_dot_r/dx_dot_ds)");
    if (r.n <= 0) throw IncompleteTrace("record " + std::to_string(r.k) + " lacks dimension n");
    if (!(r.mu > 0.0)) {
      ++out.skipped;
      continue;
    }

    GapStepCheck c;
    c.k = r.k;
    c.mu = r.mu;
    c.mu_next = r.mu_next;
    c.alpha = r.alpha;
    c.sigma = r.sigma;
    const double n = static_cast<double>(r.n);
    c.kappa1_hat = std::abs(r.e_dot_r) / (n * r.mu);
    c.kappa2_hat = std::abs(r.dx_dot_ds) / (n * r.mu * r.mu);
    out.kappa1_max = std::max(out.kappa1_max, c.kappa1_hat);
    out.kappa2_max = std::max(out.kappa2_max, c.kappa2_hat);
    c.hypothesis_ok = c.sigma + c.kappa1_hat < 1.0;

    const double predicted = (1.0 - c.alpha * (1.0 - c.sigma)) * r.mu +
                             (c.alpha / n) * r.e_dot_r +
                             (c.alpha * c.alpha / n) * r.dx_dot_ds;
    c.identity_rel_err = std::abs(c.mu_next - predicted) / std::max(r.mu, 1e-300);
    c.identity_ok = c.identity_rel_err <= rel_tol;

    c.bound_value = (1.0 - c.alpha * (1.0 - c.sigma - c.kappa1_hat)) * r.mu +
                    c.alpha * c.alpha * c.kappa2_hat * r.mu * r.mu;
    c.bound_ok = c.mu_next <= c.bound_value * (1.0 + rel_tol) + 1e-300;

    if ((!c.identity_ok || !c.bound_ok) && out.first_violation < 0)
      out.first_violation = c.k;
    out.all_ok = out.all_ok && c.identity_ok && c.bound_ok;
    out.steps.push_back(c);
  }
  return out;
}

inline nlohmann::ordered_json gap_check_json(const GapCheckResult& res) {
  nlohmann::ordered_json j;
  j["check"] = "gap-recursion";
  j["steps"] = res.steps.size();
  j["skipped"] = res.skipped;
  j["all_ok"] = res.all_ok;
  j["first_violation"] = res.first_violation;
  j["empirical_kappa1_max"] = res.kappa1_max;
  j["empirical_kappa2_max"] = res.kappa2_max;
  nlohmann::ordered_json per;
  for (const auto& s : res.steps) {
    nlohmann::ordered_json e;
    e["k"] = s.k;
    e["identity_rel_err"] = s.identity_rel_err;
    e["bound_ok"] = s.bound_ok;
    e["hypothesis_ok"] = s.hypothesis_ok;
    per.push_back(e);
  }
  j["per_step"] = std::move(per);
  return j;
}

// Exhaustive verification grid over omega in {0.1..0.9}, C mu0 in
// {0, 0.05, .., omega - 0.05}, horizon 200, with mu0 fixed at 0.25. For each
// point: zero bound violations, and the iteration estimate matches the first
// envelope crossing within +1 while the simulated sequence is at or below eps
// at the estimated index.
struct GridVerdict {
  int points = 0;
  int bound_violations = 0;
  int estimate_misses = 0;
  double worst_estimate_gap = 0.0;
  bool all_ok = false;
};

inline GridVerdict contraction_grid_verdict() {
  GridVerdict v;
  const double mu0 = 0.25;
  const std::vector<double> eps_grid = {1e-2, 1e-6, 1e-10};
  for (int wi = 1; wi <= 9; ++wi) {
    const double omega = 0.1 * wi;
    for (int ci = 0;; ++ci) {
      const double cmu0 = 0.05 * ci;
      if (cmu0 > omega - 0.05 + 1e-12) break;
      RecursionParams p{omega, cmu0 / mu0, mu0, 200};
      const std::vector<double> seq = simulate_gap_recursion(p);
      const ContractionCheck chk = check_contraction_bound(seq, p.omega, p.C);
      ++v.points;
      if (!chk.all_ok) ++v.bound_violations;

      for (double eps : eps_grid) {
        const int est = contraction_iteration_estimate(p.omega, p.C, p.mu0, eps);
        // First index where the geometric envelope itself crosses eps.
        int k_env = 0;
        double env = mu0;
        while (env > eps && k_env < 100000) {
          env *= chk.ratio;
          ++k_env;
        }
        const int gap = std::abs(est - k_env);
        v.worst_estimate_gap = std::max(v.worst_estimate_gap, static_cast<double>(gap));
        const bool sim_ok =
            est <= p.horizon ? seq[static_cast<size_t>(est)] <= eps * (1.0 + 1e-12) : true;
        if (gap > 1 || !sim_ok) ++v.estimate_misses;
      }
    }
  }
  v.all_ok = v.bound_violations == 0 && v.estimate_misses == 0;
  return v;
}

inline nlohmann::ordered_json grid_verdict_json(const GridVerdict& v) {
  nlohmann::ordered_json j;
  j["check"] = "contraction-grid";
  j["points"] = v.points;
  j["bound_violations"] = v.bound_violations;
  j["estimate_misses"] = v.estimate_misses;
  j["worst_estimate_gap"] = v.worst_estimate_gap;
  j["all_ok"] = v.all_ok;
  return j;
}

// Iteration growth measurement. Each variant runs its canonical configuration:
// the short-step rule needs dimension-aware centering sigma_n = 1 - 0.04/sqrt(n)
// with a tight boundary fraction, while the long-step rule runs aggressive
// centering at a moderate boundary fraction. Solves use direct factorizations
// so the counts measure the stepping rule, not the inner solver.
struct ScanRow {
  int n = 0;
  long iterations = 0;
  bool converged = false;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  double exponent = 0.0;  // least-squares slope of log(iterations) vs log(n)
};

inline double fit_growth_exponent(const std::vector<ScanRow>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& r : rows) {
    if (!r.converged || r.iterations <= 0) continue;
    const double lx = std::log(static_cast<double>(r.n));
    const double ly = std::log(static_cast<double>(r.iterations));
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / denom;
}

inline IpmConfig scan_config(IpmVariant variant, int n, double eps) {
  IpmConfig cfg;
  cfg.variant = variant;
  cfg.eps_tol = eps;
  cfg.max_iterations = 200000;
  cfg.solver.mode = SolverPolicy::Mode::direct;
  if (variant == IpmVariant::short_step) {
    cfg.sigma = 1.0 - 0.04 / std::sqrt(static_cast<double>(n));
    cfg.tau = 0.995;
  } else {
    cfg.sigma = 0.1;
    cfg.tau = 0.5;
  }
  return cfg;
}

inline ScanResult complexity_scan(const std::function<QuadraticProgram(int)>& family,
                                  IpmVariant variant, const std::vector<int>& sizes, double eps) {
  ScanResult out;
  for (int n : sizes) {
    ScanRow row;
    row.n = n;
    try {
      const QuadraticProgram qp = family(n);
      const SolveResult res = ipm_solve(qp, scan_config(variant, n, eps));
      row.iterations = res.iterations;
      row.converged = res.status == TerminationStatus::converged;
    } catch (const std::exception&) {
      row.converged = false;  // recorded, scan continues
    }
    out.rows.push_back(row);
  }
  out.exponent = fit_growth_exponent(out.rows);
  return out;
}

}  // namespace ipkit
