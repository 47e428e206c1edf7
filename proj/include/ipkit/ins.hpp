#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ipkit/errors.hpp"
#include "ipkit/ipm.hpp"
#include "ipkit/kkt_solver.hpp"
#include "ipkit/problem.hpp"
#include "ipkit/trace.hpp"

namespace ipkit {

enum class HessianMode { exact, bfgs };

struct BacktrackParams {
  double beta = 0.5;  // step shrink factor
  double c = 1e-4;    // sufficient-decrease constant
  int max_backtracks = 40;
};

struct InsConfig {
  double theta = 0.1;        // ridge on the reduced (1,1) block
  double alpha_scale = 0.1;  // damping applied on top of the boundary rule
  double tau = 0.1;
  double eps_tol = 1e-4;
  double sigma = std::numeric_limits<double>::quiet_NaN();  // NaN -> tau * (1 - eps_tol)
  HessianMode hessian_mode = HessianMode::exact;
  bool ecnp_enabled = false;  // equality-phase refinement near interior optima
  enum class EcnpForcing { constant, adaptive };
  EcnpForcing ecnp_forcing = EcnpForcing::adaptive;
  double ecnp_eta = 0.5;  // forcing ceiling eta_bar
  BacktrackParams backtracking;
  int max_iterations = 100;
  SolverPolicy solver;
  std::ostream* log = nullptr;
};

inline double effective_sigma(const InsConfig& cfg) {
  return std::isnan(cfg.sigma) ? cfg.tau * (1.0 - cfg.eps_tol) : cfg.sigma;
}

inline void validate_ins_config(const InsConfig& cfg) {
  const double sigma = effective_sigma(cfg);
  if (!(cfg.theta >= 0.0)) throw ConfigError("theta must be nonnegative");
  if (!(cfg.alpha_scale >= 0.1 && cfg.alpha_scale <= 1.0))
    throw ConfigError("alpha_scale must lie in [0.1, 1]");
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw ConfigError("tau must lie in (0,1)");
  if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("sigma must lie in (0,1)");
  if (!(cfg.eps_tol > 0.0)) throw ConfigError("eps_tol must be positive");
  if (!(cfg.ecnp_eta > 0.0 && cfg.ecnp_eta < 1.0)) throw ConfigError("ecnp_eta must lie in (0,1)");
  if (!(cfg.backtracking.beta > 0.0 && cfg.backtracking.beta < 1.0))
    throw ConfigError("backtracking.beta must lie in (0,1)");
  if (!(cfg.backtracking.c > 0.0 && cfg.backtracking.c < 1.0))
    throw ConfigError("backtracking.c must lie in (0,1)");
  if (cfg.backtracking.max_backtracks < 1) throw ConfigError("max_backtracks must be >= 1");
  // 0 is allowed: run no steps and report non-convergence.
  if (cfg.max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
}

// Direct Hessian approximation H maintained by the rank-two update
//   H <- H - (H s s' H) / (s' H s) + (y y') / (y' s)
// with Powell damping: when y's < 0.2 s'Hs the update uses the blend
// y_bar = phi y + (1 - phi) H s, phi = 0.8 s'Hs / (s'Hs - y's), which keeps
// y_bar's = 0.2 s'Hs > 0 and therefore preserves positive definiteness.
struct BfgsState {
  MatrixXd H;
  long updates = 0;
  long damped = 0;
};

inline BfgsState bfgs_init(int n) { return BfgsState{MatrixXd::Identity(n, n), 0, 0}; }

inline void bfgs_update(BfgsState& state, const VectorXd& s, const VectorXd& y) {
  if (s.size() != state.H.rows() || y.size() != state.H.rows())
    throw DimensionMismatch("update vectors do not match state dimension");
  if (s.norm() == 0.0) return;  // no displacement, nothing to learn
  const VectorXd Hs = state.H * s;
  const double sHs = s.dot(Hs);
  if (sHs <= 0.0) return;  // defensive: H lost definiteness numerically
  const double ys = y.dot(s);

  VectorXd yb = y;
  if (ys < 0.2 * sHs) {
    const double phi = 0.8 * sHs / (sHs - ys);
    yb = phi * y + (1.0 - phi) * Hs;
    ++state.damped;
  }
  const double ybs = yb.dot(s);
  state.H += yb * yb.transpose() / ybs - Hs * Hs.transpose() / sHs;
  state.H = 0.5 * (state.H + state.H.transpose());
  ++state.updates;
}

// Equality-phase residual F(x, y) = [grad f(x) + A'y; Ax - b]; bound
// multipliers are dropped in this phase.
inline VectorXd ecnp_residual(const NonlinearProgram& prog, const VectorXd& x,
                              const VectorXd& y) {
  if (x.size() != prog.n() || y.size() != prog.m())
    throw DimensionMismatch("ecnp_residual size mismatch");
  VectorXd F(prog.n() + prog.m());
  F.segment(0, prog.n()) = prog.grad(x) + prog.A.transpose() * y;
  F.segment(prog.n(), prog.m()) = prog.A * x - prog.b;
  return F;
}

namespace detail {

inline MatrixXd ecnp_jacobian(const NonlinearProgram& prog, const VectorXd& x, double theta,
                              const MatrixXd* hessian_override) {
  const int n = prog.n(), m = prog.m();
  MatrixXd J = MatrixXd::Zero(n + m, n + m);
  if (hessian_override != nullptr)
    J.block(0, 0, n, n) = *hessian_override;
  else
    J.block(0, 0, n, n) = prog.hessian_checked(x);
  J.block(0, 0, n, n).diagonal().array() += theta;
  J.block(0, n, n, m) = prog.A.transpose();
  J.block(n, 0, m, n) = prog.A;
  return J;
}

}  // namespace detail

struct EcnpResult {
  VectorXd x, y;
  int iterations = 0;
  long inner_iterations = 0;
  bool converged = false;
};

// Inexact Newton on F with a residual-based line search. The direction is
// computed from the ridge-regularized Jacobian and then refined until the
// TRUE Jacobian satisfies the forcing bound ||J d + F|| <= eta_k ||F||; the
// step length comes from backtracking on the merit 0.5 ||F||^2 with
// sufficient decrease c * alpha * ||J d||^2. No boundary rule applies here.
inline EcnpResult ecnp_solve(const NonlinearProgram& prog, const VectorXd& x0,
                             const VectorXd& y0, const InsConfig& cfg,
                             SolveTrace* trace = nullptr, int k_offset = 0,
                             BfgsState* bfgs = nullptr, int max_iterations = -1) {
  EcnpResult out;
  out.x = x0;
  out.y = y0;
  const int n = prog.n(), m = prog.m();
  const int limit = max_iterations >= 0 ? max_iterations : cfg.max_iterations;

  for (int k = 0; k < limit; ++k) {
    VectorXd F = ecnp_residual(prog, out.x, out.y);
    const double f_norm = F.norm();
    const double f_top_inf =
        n > 0 ? F.segment(0, n).cwiseAbs().maxCoeff() : 0.0;
    const double f_bot_inf = m > 0 ? F.segment(n, m).cwiseAbs().maxCoeff() : 0.0;
    if (f_top_inf <= cfg.eps_tol && f_bot_inf <= cfg.eps_tol) {
      out.converged = true;
      break;
    }

    const double eta_k = cfg.ecnp_forcing == InsConfig::EcnpForcing::adaptive
                             ? std::min(cfg.ecnp_eta, f_norm)
                             : cfg.ecnp_eta;

    Stopwatch step_watch;
    const MatrixXd* hess_override = bfgs ? &bfgs->H : nullptr;
    const MatrixXd J_true = detail::ecnp_jacobian(prog, out.x, 0.0, hess_override);
    const MatrixXd J_reg = detail::ecnp_jacobian(prog, out.x, cfg.theta, hess_override);

    KktSystem sys;
    sys.K = J_reg;
    sys.rhs = -F;
    sys.form = KktForm::ecnp;
    sys.n = n;
    sys.m = m;

    // The forcing schedule owns the linear-solve tolerance in this phase, so
    // eta_k replaces the policy ceiling and the adaptive gap rule is bypassed.
    SolverPolicy inner_policy = cfg.solver;
    inner_policy.delta_max = eta_k;
    inner_policy.forcing = SolverPolicy::Forcing::constant;
    NewtonDirection dir = solve_kkt(sys, inner_policy, 0.0);
    long inner = dir.inner_iterations;
    VectorXd d(n + m);
    d << dir.dx, dir.dy;

    // Refine against the true Jacobian until the forcing bound holds; the
    // ridge makes each refinement contract by roughly theta * ||J_reg^{-1}||.
    double true_res = (J_true * d + F).norm();
    double prev = std::numeric_limits<double>::infinity();
    int rounds = 0;
    while (true_res > eta_k * f_norm && rounds < 50) {
      if (true_res >= prev) {  // ridge too large to contract: solve the true system
        KktSystem exact{J_true, -F, KktForm::ecnp, n, m};
        NewtonDirection fix = solve_direct(exact);
        d << fix.dx, fix.dy;
        inner += fix.inner_iterations;
        true_res = (J_true * d + F).norm();
        break;
      }
      prev = true_res;
      KktSystem corr{J_reg, -(J_true * d + F), KktForm::ecnp, n, m};
      NewtonDirection delta = solve_kkt(corr, inner_policy, 0.0);
      d.segment(0, n) += delta.dx;
      d.segment(n, m) += delta.dy;
      inner += delta.inner_iterations;
      true_res = (J_true * d + F).norm();
      ++rounds;
    }

    // Backtracking on the merit 0.5||F||^2.
    const double jd_sq = (J_true * d).squaredNorm();
    const double merit = 0.5 * f_norm * f_norm;
    double alpha = 1.0;
    int backtracks = 0;
    VectorXd x_trial, y_trial;
    while (true) {
      x_trial = out.x + alpha * d.segment(0, n);
      y_trial = out.y + alpha * d.segment(n, m);
      const double merit_trial = 0.5 * ecnp_residual(prog, x_trial, y_trial).squaredNorm();
      if (merit_trial <= merit - cfg.backtracking.c * alpha * jd_sq) break;
      if (++backtracks >= cfg.backtracking.max_backtracks) {
        if (cfg.log) (*cfg.log) << "equality phase: line search exhausted at step " << k << "\n";
        break;
      }
      alpha *= cfg.backtracking.beta;
    }

    if (bfgs) {
      const VectorXd s_vec = x_trial - out.x;
      const VectorXd y_vec = prog.grad(x_trial) - prog.grad(out.x);
      bfgs_update(*bfgs, s_vec, y_vec);
    }
    out.x = x_trial;
    out.y = y_trial;
    out.iterations = k + 1;
    out.inner_iterations += inner;

    if (trace) {
      TraceRecord rec;
      rec.k = k_offset + k;
      rec.phase = "ecnp";
      rec.n = n;
      rec.alpha = alpha;
      rec.f_norm = f_norm;
      rec.eta = eta_k;
      rec.inner_iters = static_cast<int>(inner);
      rec.inexactness = f_norm > 0.0 ? true_res / f_norm : 0.0;
      rec.wall_ms = step_watch.elapsed_ms();
      trace->records.push_back(std::move(rec));
    }
  }
  if (!out.converged) {
    const VectorXd F = ecnp_residual(prog, out.x, out.y);
    const double top = n > 0 ? F.segment(0, n).cwiseAbs().maxCoeff() : 0.0;
    const double bot = m > 0 ? F.segment(n, m).cwiseAbs().maxCoeff() : 0.0;
    out.converged = top <= cfg.eps_tol && bot <= cfg.eps_tol;
  }
  return out;
}

// One damped step of the reduced Newton system with ds recovered by
// back-substitution, so the complementarity row holds exactly and the
// measured e'r of the step is zero up to rounding.
struct InsStepResult {
  Iterate next;
  NewtonDirection dir;
  Residuals residuals;
  double mu = 0.0;
  double mu_next = 0.0;
  double alpha = 0.0;
  double alpha_boundary = 0.0;  // boundary rule before alpha_scale damping
  double sigma = 0.0;
  double nbhd_before = 0.0;
  double e_dot_r = 0.0;
  double dx_dot_ds = 0.0;
};

inline InsStepResult ins_step(const NonlinearProgram& prog, const Iterate& it,
                              const InsConfig& cfg, const MatrixXd* hessian_override = nullptr) {
  detail::require_interior(it, "ins_step");
  InsStepResult out;
  out.sigma = effective_sigma(cfg);
  out.mu = duality_gap(it);
  out.residuals = compute_residuals(prog, it, out.sigma);
  out.nbhd_before = neighborhood_distance(it, IpmVariant::long_step);

  KktSystem sys = assemble_kkt_ins(prog, it, out.sigma, cfg.theta, hessian_override);
  out.dir = solve_kkt(sys, cfg.solver, out.mu);
  out.dir.ds = recover_delta_s(it, out.dir.dx, out.sigma);

  const int n = prog.n();
  const VectorXd target = VectorXd::Constant(n, out.sigma * out.mu) - it.x.cwiseProduct(it.s);
  out.e_dot_r =
      (it.s.cwiseProduct(out.dir.dx) + it.x.cwiseProduct(out.dir.ds) - target).sum();
  out.dx_dot_ds = out.dir.dx.dot(out.dir.ds);

  out.alpha_boundary = fraction_to_boundary(it.x, out.dir.dx, it.s, out.dir.ds, cfg.tau);
  out.alpha = cfg.alpha_scale * out.alpha_boundary;

  out.next.x = it.x + out.alpha * out.dir.dx;
  out.next.y = it.y + out.alpha * out.dir.dy;
  out.next.s = it.s + out.alpha * out.dir.ds;
  out.mu_next = duality_gap(out.next);
  return out;
}

// Full solve: damped reduced-system steps, optional quasi-Newton Hessian, and
// optional delegation to the equality phase once every component clears
// max(10 * eps_tol, sqrt(mu)) - i.e. once no component is tracking the
// boundary. After delegation the bound multipliers are retired (s = 0).
inline SolveResult ins_solve(const NonlinearProgram& prog, const InsConfig& cfg,
                             SolveTrace* trace = nullptr) {
  validate_ins_config(cfg);
  if (cfg.hessian_mode == HessianMode::exact && !prog.has_hessian())
    throw ConfigError("exact Hessian mode requires a Hessian callback");
  if (trace) {
    trace->algorithm = "ins";
    trace->records.clear();
  }

  SolveResult result;
  Iterate it = make_centered_start(prog);
  BfgsState bfgs = bfgs_init(prog.n());
  const bool use_bfgs = cfg.hessian_mode == HessianMode::bfgs;
  Stopwatch total_watch;

  for (int k = 0;; ++k) {
    const double mu = duality_gap(it);
    const double sigma = effective_sigma(cfg);
    const Residuals res = compute_residuals(prog, it, sigma);

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

    const double gate = std::max(10.0 * cfg.eps_tol, std::sqrt(mu));
    if (cfg.ecnp_enabled && it.x.minCoeff() >= gate) {
      EcnpResult ec = ecnp_solve(prog, it.x, it.y, cfg, trace, k,
                                 use_bfgs ? &bfgs : nullptr, cfg.max_iterations - k);
      it.x = ec.x;
      it.y = ec.y;
      it.s = VectorXd::Zero(prog.n());
      result.iterations = k + ec.iterations;
      result.inner_iterations += ec.inner_iterations;
      result.status =
          ec.converged ? TerminationStatus::converged : TerminationStatus::max_iterations;
      break;
    }

    Stopwatch step_watch;
    InsStepResult step =
        ins_step(prog, it, cfg, use_bfgs ? &bfgs.H : nullptr);
    result.inner_iterations += step.dir.inner_iterations;

    if (use_bfgs) {
      const VectorXd s_vec = step.next.x - it.x;
      const VectorXd y_vec = prog.grad(step.next.x) - prog.grad(it.x);
      bfgs_update(bfgs, s_vec, y_vec);
    }

    if (trace) {
      TraceRecord rec;
      rec.k = k;
      rec.phase = "interior";
      rec.n = static_cast<int>(prog.n());
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

    it = std::move(step.next);
    result.iterations = k + 1;
  }

  result.final = it;
  result.mu_final = it.x.size() ? it.x.dot(it.s) / it.x.size() : 0.0;
  const Residuals res_final = compute_residuals(prog, it, effective_sigma(cfg));
  result.r_p_inf = res_final.r_p_inf;
  result.r_d_inf = res_final.r_d_inf;
  result.objective = prog.f(it.x);
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
