#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ipkit/errors.hpp"
#include "ipkit/kkt_solver.hpp"
#include "ipkit/problem.hpp"
#include "ipkit/trace.hpp"
#include "ipkit/util.hpp"

namespace ipkit {

// short_step confines iterates to the 2-norm centrality neighborhood and takes
// the guaranteed-width step; long_step uses the inf-norm neighborhood and the
// fraction-to-the-boundary step.
enum class IpmVariant { short_step, long_step };

// Width parameter of the short-step rule alpha = min(1, eta / (n (1 - sigma - kappa1))).
inline constexpr double kShortStepEta = 0.5;

// Gap floor below which convergence is declared rather than dividing by mu.
inline constexpr double kGapFloor = 1e-300;

struct IpmConfig {
  IpmVariant variant = IpmVariant::long_step;
  double gamma = 0.1;  // neighborhood radius (logged, not enforced)
  double tau = 0.1;    // fraction-to-the-boundary factor
  double eps_tol = 1e-4;
  // Centering weight; NaN means the default coupling sigma = tau * (1 - eps_tol).
  double sigma = std::numeric_limits<double>::quiet_NaN();
  int max_iterations = 100;
  SolverPolicy solver;
  std::ostream* log = nullptr;  // neighborhood violations and fallbacks go here
};

inline double effective_sigma(const IpmConfig& cfg) {
  return std::isnan(cfg.sigma) ? cfg.tau * (1.0 - cfg.eps_tol) : cfg.sigma;
}

inline void validate_ipm_config(const IpmConfig& cfg) {
  const double sigma = effective_sigma(cfg);
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw ConfigError("tau must lie in (0,1)");
  if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("sigma must lie in (0,1)");
  if (!(cfg.eps_tol > 0.0)) throw ConfigError("eps_tol must be positive");
  // 0 is allowed: run no steps and report non-convergence.
  if (cfg.max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
}

// Scaled distance from the central path: ||XSe - mu e|| / mu in the variant's
// norm (2-norm for short_step, inf-norm for long_step).
inline double neighborhood_distance(const Iterate& it, IpmVariant variant) {
  if (!it.is_interior()) throw NonInteriorIterate("neighborhood_distance needs an interior point");
  const double mu = duality_gap(it);
  if (mu <= kGapFloor) throw ZeroGap("gap too small to normalize");
  const VectorXd dev = it.x.cwiseProduct(it.s) - VectorXd::Constant(it.x.size(), mu);
  const double norm = variant == IpmVariant::short_step ? dev.norm() : dev.cwiseAbs().maxCoeff();
  return norm / mu;
}

// alpha = min(1, tau * min ratios to the boundary over components moving
// toward it), so x + alpha dx keeps at least the fraction (1 - tau) of each
// shrinking component. No shrinking component means a full step.
inline double fraction_to_boundary(const VectorXd& x, const VectorXd& dx, const VectorXd& s,
                                   const VectorXd& ds, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0,1)");
  if (x.size() != dx.size() || s.size() != ds.size() || x.size() != s.size())
    throw DimensionMismatch("fraction_to_boundary size mismatch");
  double ratio = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (dx[j] < 0.0) ratio = std::min(ratio, -x[j] / dx[j]);
    if (ds[j] < 0.0) ratio = std::min(ratio, -s[j] / ds[j]);
  }
  return std::min(1.0, tau * ratio);
}

// Interior start: x is scale*e shifted onto Ax = b by the minimum-norm
// correction, s = scale*e, y = 0. Components pushed below the floor
// 0.1*scale by the shift mean the heuristic cannot produce an interior
// feasible point at this scale.
inline Iterate make_centered_start(const MatrixXd& A, const VectorXd& b, double scale = 1.0) {
  if (A.rows() != b.size()) throw DimensionMismatch("A row count must match b");
  if (!(scale > 0.0)) throw ConfigError("scale must be positive");
  const Eigen::Index n = A.cols(), m = A.rows();
  Iterate it;
  it.x = VectorXd::Constant(n, scale);
  if (m > 0) {
    Eigen::PartialPivLU<MatrixXd> aat(A * A.transpose());
    it.x += A.transpose() * aat.solve(b - A * it.x);
  }
  if (it.x.minCoeff() < 0.1 * scale)
    throw InfeasibleStart("projection pushed a component below the positivity floor");
  it.y = VectorXd::Zero(m);
  it.s = VectorXd::Constant(n, scale);
  return it;
}

inline Iterate make_centered_start(const QuadraticProgram& qp, double scale = 1.0) {
  return make_centered_start(qp.A, qp.b, scale);
}

inline Iterate make_centered_start(const NonlinearProgram& prog, double scale = 1.0) {
  return make_centered_start(prog.A, prog.b, scale);
}

// One damped, possibly inexact Newton step on the full system.
struct IpmStepResult {
  Iterate next;
  NewtonDirection dir;
  Residuals residuals;   // pre-step, at this step's sigma
  double mu = 0.0;       // pre-step gap
  double mu_next = 0.0;  // post-step gap, recomputed
  double alpha = 0.0;
  double sigma = 0.0;
  double nbhd_before = 0.0;
  double e_dot_r = 0.0;     // e'(S dx + X ds - (sigma mu e - XSe)), the solve's
                            // complementarity-row error
  double dx_dot_ds = 0.0;   // second-order gap term
  double kappa1_hat = 0.0;  // |e_dot_r| / (n mu)
};

inline IpmStepResult ipm_step(const QuadraticProgram& qp, const Iterate& it,
                              const IpmConfig& cfg) {
  detail::require_interior(it, "ipm_step");
  IpmStepResult out;
  out.sigma = effective_sigma(cfg);
  out.mu = duality_gap(it);
  out.residuals = compute_residuals(qp, it, out.sigma);
  out.nbhd_before = neighborhood_distance(it, cfg.variant);

  KktSystem sys = assemble_kkt_full(qp, it, out.sigma);
  out.dir = solve_kkt(sys, cfg.solver, out.mu);

  const int n = qp.n();
  const VectorXd target =
      VectorXd::Constant(n, out.sigma * out.mu) - it.x.cwiseProduct(it.s);
  const VectorXd comp_err =
      it.s.cwiseProduct(out.dir.dx) + it.x.cwiseProduct(out.dir.ds) - target;
  out.e_dot_r = comp_err.sum();
  out.kappa1_hat = std::abs(out.e_dot_r) / (n * out.mu);
  out.dx_dot_ds = out.dir.dx.dot(out.dir.ds);

  const double alpha_ftb =
      fraction_to_boundary(it.x, out.dir.dx, it.s, out.dir.ds, cfg.tau);
  if (cfg.variant == IpmVariant::short_step) {
    // Guaranteed width, additionally capped by the boundary rule so the step
    // never leaves the positive orthant.
    const double margin = 1.0 - out.sigma - out.kappa1_hat;
    const double width = margin > 0.0 ? kShortStepEta / (n * margin)
                                      : std::numeric_limits<double>::infinity();
    out.alpha = std::min({1.0, width, alpha_ftb});
  } else {
    out.alpha = alpha_ftb;
  }

  out.next.x = it.x + out.alpha * out.dir.dx;
  out.next.y = it.y + out.alpha * out.dir.dy;
  out.next.s = it.s + out.alpha * out.dir.ds;
  out.mu_next = duality_gap(out.next);
  return out;
}

enum class TerminationStatus { converged, max_iterations };

struct SolveResult {
  Iterate final;
  TerminationStatus status = TerminationStatus::max_iterations;
  int iterations = 0;
  long inner_iterations = 0;
  double mu_final = 0.0;
  double r_p_inf = 0.0;
  double r_d_inf = 0.0;
  double objective = 0.0;
  bool gap_underflow = false;
};

namespace detail {
// Termination test: inf-norm primal and dual residuals and the duality gap all
// at or below eps.
inline bool termination_reached(const Residuals& res, double mu, double eps) {
  return res.r_p_inf <= eps && res.r_d_inf <= eps && mu <= eps;
}
}  // namespace detail

inline SolveResult ipm_solve(const QuadraticProgram& qp, const IpmConfig& cfg,
                             SolveTrace* trace = nullptr) {
  validate_ipm_config(cfg);
  if (trace) {
    trace->algorithm = "ipm";
    trace->records.clear();
  }

  SolveResult result;
  Iterate it = make_centered_start(qp);
  Stopwatch total_watch;

  for (int k = 0;; ++k) {
    const double mu = duality_gap(it);
    const double sigma = effective_sigma(cfg);
    const Residuals res = compute_residuals(qp, it, sigma);

    if (detail::termination_reached(res, mu, cfg.eps_tol)) {
      result.status = TerminationStatus::converged;
      break;
    }
    if (mu < kGapFloor) {
      result.status = TerminationStatus::converged;
      result.gap_underflow = true;
      break;
    }
    if (k >= cfg.max_iterations) {
      result.status = TerminationStatus::max_iterations;
      break;
    }

    Stopwatch step_watch;
    IpmStepResult step = ipm_step(qp, it, cfg);
    result.inner_iterations += step.dir.inner_iterations;

    if (trace) {
      TraceRecord rec;
      rec.k = k;
      rec.phase = "interior";
      rec.n = static_cast<int>(qp.n());
      rec.mu = step.mu;
      rec.mu_next = step.mu_next;
      rec.alpha = step.alpha;
      rec.sigma = step.sigma;
      rec.r_p_inf = step.residuals.r_p_inf;
      rec.r_d_inf = step.residuals.r_d_inf;
      rec.r_c_inf = step.residuals.r_c_inf;
      rec.r_p_2 = step.residuals.r_p_2;
      rec.r_d_2 = step.residuals.r_d_2;
      rec.r_c_2 = step.residuals.r_c_2;
      rec.nbhd_dist = step.nbhd_before;
      rec.inner_iters = step.dir.inner_iterations;
      rec.inexactness = step.dir.inexactness;
      rec.e_dot_r = step.e_dot_r;
      rec.dx_dot_ds = step.dx_dot_ds;
      rec.wall_ms = step_watch.elapsed_ms();
      trace->records.push_back(std::move(rec));
    }

    if (cfg.log && step.nbhd_before > cfg.gamma)
      (*cfg.log) << "iteration " << k << ": neighborhood distance " << step.nbhd_before
                 << " exceeds gamma " << cfg.gamma << "\n";

    it = std::move(step.next);
    result.iterations = k + 1;
  }

  result.final = it;
  result.mu_final = duality_gap(it);
  const Residuals res_final = compute_residuals(qp, it, effective_sigma(cfg));
  result.r_p_inf = res_final.r_p_inf;
  result.r_d_inf = res_final.r_d_inf;
  result.objective = qp.objective(it.x);
  if (trace) {
    trace->status =
        result.status == TerminationStatus::converged ? "converged" : "max-iterations";
    trace->total_time_ms = total_watch.elapsed_ms();
    trace->termination_test_strict =
        detail::termination_reached(res_final, result.mu_final, cfg.eps_tol);
    trace->termination_test_relaxed =
        detail::termination_reached(res_final, result.mu_final, 10.0 * cfg.eps_tol);
  }
  return result;
}

}  // namespace ipkit
