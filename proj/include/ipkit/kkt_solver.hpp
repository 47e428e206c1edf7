#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ipkit/errors.hpp"
#include "ipkit/problem.hpp"

namespace ipkit {

// How Newton systems get solved. delta_max is the inexactness cap: the
// iterative path stops once ||K dz - rhs|| <= delta * ||rhs|| with
// delta = delta_max (constant forcing) or min(delta_max, sqrt(gap)) (adaptive).
// The 0.45 default is half the complementarity reduction 1 - sigma at the
// default centering, divided by the residual-coupling constant c_gamma = 1.
struct SolverPolicy {
  enum class Mode { direct, iterative };
  enum class Forcing { constant, adaptive };
  enum class Precond { none, jacobi, schur };

  Mode mode = Mode::direct;
  double delta_max = 0.45;
  Forcing forcing = Forcing::adaptive;
  Precond preconditioner = Precond::none;
  int max_inner = 400;
  int restart = 50;
  bool fallback_to_direct = true;
};

// A computed Newton direction. inexactness is always recomputed from the
// returned vector as ||K dz - rhs|| / ||rhs||, never taken from solver
// internals. ds stays zero-filled for reduced systems until recovered.
struct NewtonDirection {
  VectorXd dx, dy, ds;
  double inexactness = 0.0;
  int inner_iterations = 0;
  bool used_fallback = false;
};

using ApplyFn = std::function<VectorXd(const VectorXd&)>;

struct Preconditioner {
  ApplyFn apply;  // v -> P^{-1} v
  SolverPolicy::Precond kind = SolverPolicy::Precond::none;
};

namespace detail {

// ||K z - rhs|| / ||rhs||, accumulated in extended precision. Late systems mix
// entry magnitudes across ten-plus orders, and a double-accumulated row sum
// carries rounding noise of that full span; measured that way, even the exact
// solution can look out of tolerance. The widened accumulator reports the
// residual of the vector actually returned, not the evaluation noise.
inline double relative_residual(const MatrixXd& K, const VectorXd& z, const VectorXd& rhs) {
  const Eigen::Index rows = K.rows();
  const Eigen::Index cols = K.cols();
  std::vector<long double> acc(static_cast<size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) acc[static_cast<size_t>(i)] = -rhs[i];
  for (Eigen::Index j = 0; j < cols; ++j) {
    const long double zj = z[j];
    const double* col = K.col(j).data();
    for (Eigen::Index i = 0; i < rows; ++i)
      acc[static_cast<size_t>(i)] += static_cast<long double>(col[i]) * zj;
  }
  long double num = 0.0L;
  for (Eigen::Index i = 0; i < rows; ++i) num += acc[static_cast<size_t>(i)] * acc[static_cast<size_t>(i)];
  const double rn = rhs.norm();
  const double residual = static_cast<double>(std::sqrt(num));
  if (rn == 0.0) return residual;
  return residual / rn;
}

inline NewtonDirection split_direction(const KktSystem& sys, const VectorXd& z) {
  NewtonDirection d;
  d.dx = z.segment(0, sys.n);
  d.dy = z.segment(sys.n, sys.m);
  if (sys.form == KktForm::full)
    d.ds = z.segment(sys.n + sys.m, sys.n);
  else
    d.ds = VectorXd::Zero(sys.n);
  return d;
}

}  // namespace detail

namespace detail {

// rhs - K z accumulated in extended precision; the norm comes along for free.
inline double accurate_residual_vector(const MatrixXd& K, const VectorXd& z, const VectorXd& rhs,
                                       VectorXd& out) {
  const Eigen::Index rows = K.rows();
  const Eigen::Index cols = K.cols();
  std::vector<long double> acc(static_cast<size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) acc[static_cast<size_t>(i)] = rhs[i];
  for (Eigen::Index j = 0; j < cols; ++j) {
    const long double zj = z[j];
    const double* col = K.col(j).data();
    for (Eigen::Index i = 0; i < rows; ++i)
      acc[static_cast<size_t>(i)] -= static_cast<long double>(col[i]) * zj;
  }
  out.resize(rows);
  long double num = 0.0L;
  for (Eigen::Index i = 0; i < rows; ++i) {
    out[i] = static_cast<double>(acc[static_cast<size_t>(i)]);
    num += acc[static_cast<size_t>(i)] * acc[static_cast<size_t>(i)];
  }
  return static_cast<double>(std::sqrt(num));
}

// Iterative refinement against the unscaled system. The residual feeding each
// correction is the extended-precision one; a double-accumulated residual
// bottoms out at the evaluation noise of the widest row and corrections built
// from it stop helping. Near that floor a round can still overshoot, so the
// best iterate seen is what gets returned, not the last one.
inline double refine_best(const KktSystem& sys, const Eigen::PartialPivLU<MatrixXd>& lu,
                          const VectorXd& pre_scale, VectorXd& z) {
  const double rn = sys.rhs.norm();
  const double scale = rn == 0.0 ? 1.0 : rn;
  VectorXd resid;
  VectorXd best_z = z;
  double best = accurate_residual_vector(sys.K, z, sys.rhs, resid) / scale;
  for (int round = 0; round < 6 && best > 1e-12; ++round) {
    z += lu.solve(pre_scale.cwiseProduct(resid));
    const double res = accurate_residual_vector(sys.K, z, sys.rhs, resid) / scale;
    if (res < best) {
      best = res;
      best_z = z;
    }
  }
  z = best_z;
  return best;
}

}  // namespace detail

// Dense LU with partial pivoting. A pivot below 1e-14 of the largest pivot
// magnitude reports the system singular at that pivot index. Iterative
// refinement keeps the recomputed relative residual at rounding level even on
// late, badly scaled systems.
inline NewtonDirection solve_direct(const KktSystem& sys) {
  const Eigen::Index dim = sys.K.rows();
  if (sys.K.cols() != dim || sys.rhs.size() != dim)
    throw DimensionMismatch("system blocks are inconsistent");

  // Rows are equilibrated to unit infinity norm before factoring so the pivot
  // test compares like with like; the blocks legitimately differ in scale by
  // many orders of magnitude late in a solve without being near singular.
  VectorXd row_scale(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double norm = sys.K.row(i).cwiseAbs().maxCoeff();
    row_scale[i] = norm > 0.0 ? 1.0 / norm : 1.0;
  }
  const MatrixXd scaled = row_scale.asDiagonal() * sys.K;

  Eigen::PartialPivLU<MatrixXd> lu(scaled);
  const VectorXd piv = lu.matrixLU().diagonal().cwiseAbs();
  const double pmax = piv.maxCoeff();
  for (Eigen::Index i = 0; i < dim; ++i)
    if (piv[i] <= 1e-14 * pmax)
      throw SingularSystem("pivot below threshold", static_cast<int>(i));

  VectorXd z = lu.solve(row_scale.cwiseProduct(sys.rhs));
  const double res = detail::refine_best(sys, lu, row_scale, z);

  NewtonDirection d = detail::split_direction(sys, z);
  d.inexactness = res;
  d.inner_iterations = 1;
  if (d.inexactness > 1e-10)
    throw SingularSystem("direct solve residual above tolerance", -1);
  return d;
}

// Diagonal and block-elimination preconditioners are rebuilt per system from
// the assembled blocks; kind = none returns the identity.
inline Preconditioner make_preconditioner(const KktSystem& sys, SolverPolicy::Precond kind) {
  Preconditioner p;
  p.kind = kind;
  if (kind == SolverPolicy::Precond::none) {
    p.apply = [](const VectorXd& v) { return v; };
    return p;
  }
  if (kind == SolverPolicy::Precond::jacobi) {
    VectorXd d = sys.K.diagonal();
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (std::abs(d[i]) <= 1e-12 * scale) d[i] = 1.0;  // saddle blocks have zero diagonals
    p.apply = [d](const VectorXd& v) -> VectorXd { return v.cwiseQuotient(d); };
    return p;
  }

  // Schur-complement preconditioner: approximate the (1,1) block by its
  // diagonal and factor the resulting m x m complement exactly.
  const int n = sys.n, m = sys.m;
  if (sys.form == KktForm::full) {
    // Blocks of [-Q A' I; A 0 0; S 0 X]; the approximation replaces Q by diag(Q).
    const MatrixXd A = sys.K.block(n, 0, m, n);
    VectorXd s(n), x(n), dq(n);
    for (int i = 0; i < n; ++i) {
      s[i] = sys.K(n + m + i, i);
      x[i] = sys.K(n + m + i, n + m + i);
      dq[i] = -sys.K(i, i);
    }
    VectorXd D = dq + s.cwiseQuotient(x);
    for (Eigen::Index i = 0; i < D.size(); ++i)
      if (std::abs(D[i]) <= 1e-12) D[i] = 1.0;
    MatrixXd schur = A * D.cwiseInverse().asDiagonal() * A.transpose();
    auto lu = std::make_shared<Eigen::PartialPivLU<MatrixXd>>(schur);
    p.apply = [A, D, x, s, lu, n, m](const VectorXd& v) -> VectorXd {
      const VectorXd r1 = v.segment(0, n);
      const VectorXd r2 = v.segment(n, m);
      const VectorXd r3 = v.segment(n + m, n);
      const VectorXd t = r3.cwiseQuotient(x) - r1;  // (D_Q + X^{-1}S) dx - A' dy = t
      const VectorXd dy = lu->solve(r2 - A * t.cwiseQuotient(D));
      const VectorXd dx = (t + A.transpose() * dy).cwiseQuotient(D);
      const VectorXd ds = (r3 - s.cwiseProduct(dx)).cwiseQuotient(x);
      VectorXd out(2 * n + m);
      out << dx, dy, ds;
      return out;
    };
    return p;
  }

  // Reduced saddle form [H A'; A 0] with H approximated by its diagonal.
  const MatrixXd A = sys.K.block(n, 0, m, n);
  VectorXd D = sys.K.block(0, 0, n, n).diagonal();
  for (Eigen::Index i = 0; i < D.size(); ++i)
    if (std::abs(D[i]) <= 1e-12) D[i] = 1.0;
  MatrixXd schur = A * D.cwiseInverse().asDiagonal() * A.transpose();
  auto lu = std::make_shared<Eigen::PartialPivLU<MatrixXd>>(schur);
  p.apply = [A, D, lu, n, m](const VectorXd& v) -> VectorXd {
    const VectorXd r1 = v.segment(0, n);
    const VectorXd r2 = v.segment(n, m);
    const VectorXd dy = lu->solve(A * r1.cwiseQuotient(D) - r2);
    const VectorXd dx = (r1 - A.transpose() * dy).cwiseQuotient(D);
    VectorXd out(n + m);
    out << dx, dy;
    return out;
  };
  return p;
}

namespace detail {

struct GmresOutcome {
  VectorXd z;
  int steps = 0;
  bool converged = false;
  bool stagnated = false;
  double estimate = 0.0;  // solver-side relative residual estimate at exit
};

// Restarted GMRES with right preconditioning and modified Gram-Schmidt (one
// reorthogonalization pass). Stops at the first inner step whose residual
// estimate meets tol_rel * ||rhs||; the caller verifies against the true
// residual. Stagnation = a full restart cycle improving the true relative
// residual by less than 1e-14.
inline GmresOutcome gmres(const MatrixXd& K, const VectorXd& rhs, const Preconditioner& pre,
                          double tol_rel, int restart, int max_inner) {
  const Eigen::Index dim = rhs.size();
  GmresOutcome out;
  out.z = VectorXd::Zero(dim);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    out.converged = true;
    return out;
  }
  const double tol_abs = tol_rel * rhs_norm;
  double last_cycle_rel = std::numeric_limits<double>::infinity();

  while (out.steps < max_inner) {
    const VectorXd r0 = rhs - K * out.z;
    const double beta = r0.norm();
    if (beta <= tol_abs) {
      out.converged = true;
      out.estimate = beta / rhs_norm;
      return out;
    }

    const int cycle = std::min<int>(restart, max_inner - out.steps);
    std::vector<VectorXd> V;
    V.reserve(static_cast<size_t>(cycle) + 1);
    V.push_back(r0 / beta);
    MatrixXd H = MatrixXd::Zero(cycle + 1, cycle);
    VectorXd cs = VectorXd::Zero(cycle), sn = VectorXd::Zero(cycle);
    VectorXd g = VectorXd::Zero(cycle + 1);
    g[0] = beta;

    int j = 0;
    bool breakdown = false;
    for (; j < cycle; ++j) {
      VectorXd w = K * pre.apply(V[static_cast<size_t>(j)]);
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const double h = V[static_cast<size_t>(i)].dot(w);
          H(i, j) += h;
          w -= h * V[static_cast<size_t>(i)];
        }
      H(j + 1, j) = w.norm();
      if (H(j + 1, j) > 0.0) V.push_back(w / H(j + 1, j));

      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom = std::hypot(H(j, j), H(j + 1, j));
      if (denom == 0.0) {
        breakdown = true;
        ++out.steps;
        ++j;
        break;
      }
      cs[j] = H(j, j) / denom;
      sn[j] = H(j + 1, j) / denom;
      H(j, j) = denom;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++out.steps;

      if (std::abs(g[j + 1]) <= tol_abs) {
        ++j;
        break;
      }
      if (V.size() == static_cast<size_t>(j) + 1) {  // happy breakdown: subspace is invariant
        breakdown = true;
        ++j;
        break;
      }
    }

    if (j > 0) {
      const VectorXd yv = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
      VectorXd u = VectorXd::Zero(dim);
      for (int i = 0; i < j; ++i) u += yv[i] * V[static_cast<size_t>(i)];
      out.z += pre.apply(u);
    }

    const double rel = (rhs - K * out.z).norm() / rhs_norm;
    out.estimate = rel;
    if (rel <= tol_rel) {
      out.converged = true;
      return out;
    }
    if (breakdown || last_cycle_rel - rel < 1e-14) {
      out.stagnated = true;
      return out;
    }
    last_cycle_rel = rel;
  }
  return out;
}

}  // namespace detail

// Policy dispatch. current_gap feeds the adaptive forcing schedule; pass the
// duality gap of the iterate the system was assembled at (ignored for
// constant forcing and direct mode).
inline NewtonDirection solve_kkt(const KktSystem& sys, const SolverPolicy& policy,
                                 double current_gap = 0.0) {
  if (policy.mode == SolverPolicy::Mode::direct) return solve_direct(sys);

  double delta = policy.delta_max;
  if (policy.forcing == SolverPolicy::Forcing::adaptive)
    delta = std::min(policy.delta_max, std::sqrt(std::max(current_gap, 0.0)));

  Preconditioner pre = make_preconditioner(sys, policy.preconditioner);
  detail::GmresOutcome go =
      detail::gmres(sys.K, sys.rhs, pre, delta, policy.restart, policy.max_inner);

  if (go.converged) {
    NewtonDirection d = detail::split_direction(sys, go.z);
    d.inexactness = detail::relative_residual(sys.K, go.z, sys.rhs);
    d.inner_iterations = std::max(go.steps, 1);
    if (std::abs(d.inexactness - go.estimate) > 1e-10)
      throw InexactnessMismatch("solver estimate " + std::to_string(go.estimate) +
                                " vs recomputed " + std::to_string(d.inexactness));
    return d;
  }

  if (!policy.fallback_to_direct)
    throw MaxInnerIterations(go.stagnated ? "iterative solve stagnated"
                                          : "inner iteration cap reached");
  NewtonDirection d = solve_direct(sys);
  d.inner_iterations += go.steps;
  d.used_fallback = true;
  return d;
}

}  // namespace ipkit
