#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>

#include <json.hpp>

#include "ipkit/errors.hpp"

namespace ipkit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

inline void check_symmetric(const MatrixXd& Q, double tol, const char* label) {
  const double scale = std::max(1.0, Q.size() ? Q.cwiseAbs().maxCoeff() : 0.0);
  const double dev = Q.size() ? (Q - Q.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (dev > tol * scale)
    throw NonSymmetricMatrix(std::string(label) + " deviates from symmetry by " + std::to_string(dev));
}

// Numerical row rank via column-pivoted QR; threshold is relative to the
// Frobenius norm of A.
inline void check_full_row_rank(const MatrixXd& A) {
  const Eigen::Index m = A.rows(), n = A.cols();
  if (m > n) throw DimensionMismatch("constraint matrix has more rows than columns");
  if (m == 0) return;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A.transpose());
  const double tol = 1e-10 * A.norm();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::abs(qr.matrixR()(i, i)) > tol) ++rank;
  if (rank < m)
    throw RankDeficientConstraints("constraint matrix rank " + std::to_string(rank) +
                                   " < rows " + std::to_string(m));
}

}  // namespace detail

// min c'x + x'Qx/2  s.t.  Ax = b, x >= 0.  Dense storage throughout: target
// sizes are small and dense factorizations keep the solvers simple to audit.
struct QuadraticProgram {
  MatrixXd Q;  // n x n, symmetric (positive semidefiniteness is the caller's contract)
  MatrixXd A;  // m x n, full row rank
  VectorXd b;  // m
  VectorXd c;  // n

  QuadraticProgram(MatrixXd Q_, MatrixXd A_, VectorXd b_, VectorXd c_)
      : Q(std::move(Q_)), A(std::move(A_)), b(std::move(b_)), c(std::move(c_)) {
    const Eigen::Index n = c.size();
    if (Q.rows() != n || Q.cols() != n)
      throw DimensionMismatch("Q must be n x n with n = size of c");
    if (A.cols() != n) throw DimensionMismatch("A column count must match c");
    if (A.rows() != b.size()) throw DimensionMismatch("A row count must match b");
    detail::check_symmetric(Q, 1e-12, "Q");
    detail::check_full_row_rank(A);
  }

  int n() const { return static_cast<int>(c.size()); }
  int m() const { return static_cast<int>(b.size()); }

  double objective(const VectorXd& x) const { return c.dot(x) + 0.5 * x.dot(Q * x); }
};

// min f(x)  s.t.  Ax = b, x >= 0 with callback-supplied derivatives.
// Stationarity convention on this path: grad f(x) + A'y - s = 0 (the QP path
// uses A'y + s - Qx = c; the two conventions map onto each other via y -> -y).
struct NonlinearProgram {
  std::function<double(const VectorXd&)> f;
  std::function<VectorXd(const VectorXd&)> grad;
  std::function<MatrixXd(const VectorXd&)> hessian;  // may be empty (quasi-Newton mode)
  MatrixXd A;
  VectorXd b;

  NonlinearProgram(std::function<double(const VectorXd&)> f_,
                   std::function<VectorXd(const VectorXd&)> grad_,
                   std::function<MatrixXd(const VectorXd&)> hessian_, MatrixXd A_, VectorXd b_)
      : f(std::move(f_)), grad(std::move(grad_)), hessian(std::move(hessian_)),
        A(std::move(A_)), b(std::move(b_)) {
    if (!f || !grad) throw DimensionMismatch("objective and gradient callbacks are required");
    if (A.rows() != b.size()) throw DimensionMismatch("A row count must match b");
    detail::check_full_row_rank(A);
  }

  int n() const { return static_cast<int>(A.cols()); }
  int m() const { return static_cast<int>(b.size()); }

  bool has_hessian() const { return static_cast<bool>(hessian); }

  // Every Hessian evaluation is symmetry-checked; callbacks are caller code.
  MatrixXd hessian_checked(const VectorXd& x) const {
    if (!hessian) throw DimensionMismatch("no Hessian callback installed");
    MatrixXd H = hessian(x);
    if (H.rows() != A.cols() || H.cols() != A.cols())
      throw DimensionMismatch("Hessian callback returned wrong shape");
    detail::check_symmetric(H, 1e-10, "Hessian");
    return H;
  }
};

// Wrap a QP as callbacks for the nonlinear path. Note the dual sign flip
// described on NonlinearProgram: the wrapped problem's multiplier converges to
// minus the QP path's multiplier.
inline NonlinearProgram to_nlp(const QuadraticProgram& qp) {
  MatrixXd Q = qp.Q;
  VectorXd c = qp.c;
  return NonlinearProgram(
      [Q, c](const VectorXd& x) { return c.dot(x) + 0.5 * x.dot(Q * x); },
      [Q, c](const VectorXd& x) -> VectorXd { return c + Q * x; },
      [Q](const VectorXd&) -> MatrixXd { return Q; }, qp.A, qp.b);
}

// Primal-dual point (x, y, s). mu is always recomputed from x and s, never
// cached, so it cannot go stale.
struct Iterate {
  VectorXd x;
  VectorXd y;
  VectorXd s;

  bool is_interior() const { return x.size() > 0 && x.minCoeff() > 0.0 && s.minCoeff() > 0.0; }
};

inline double duality_gap(const Iterate& it) {
  if (it.x.size() != it.s.size()) throw DimensionMismatch("x and s sizes differ");
  if (it.x.size() == 0) throw DimensionMismatch("empty iterate");
  return it.x.dot(it.s) / static_cast<double>(it.x.size());
}

// Residual blocks at a point, for a given centering weight sigma:
//   r_p = Ax - b
//   r_d = A'y + s - Qx - c          (QP convention)
//   r_d = grad f(x) + A'y - s       (NLP convention)
//   r_c = XSe - sigma*mu*e
// Norms are cached at construction; duality_gap stays recomputed-on-demand.
struct Residuals {
  VectorXd r_p, r_d, r_c;
  double sigma = 0.0;
  double r_p_2 = 0.0, r_p_inf = 0.0;
  double r_d_2 = 0.0, r_d_inf = 0.0;
  double r_c_2 = 0.0, r_c_inf = 0.0;

  void cache_norms() {
    r_p_2 = r_p.norm();
    r_p_inf = r_p.size() ? r_p.cwiseAbs().maxCoeff() : 0.0;
    r_d_2 = r_d.norm();
    r_d_inf = r_d.size() ? r_d.cwiseAbs().maxCoeff() : 0.0;
    r_c_2 = r_c.norm();
    r_c_inf = r_c.size() ? r_c.cwiseAbs().maxCoeff() : 0.0;
  }
};

inline Residuals compute_residuals(const QuadraticProgram& qp, const Iterate& it, double sigma) {
  if (it.x.size() != qp.n() || it.s.size() != qp.n() || it.y.size() != qp.m())
    throw DimensionMismatch("iterate sizes do not match program");
  Residuals r;
  r.sigma = sigma;
  r.r_p = qp.A * it.x - qp.b;
  r.r_d = qp.A.transpose() * it.y + it.s - qp.Q * it.x - qp.c;
  const double mu = duality_gap(it);
  r.r_c = it.x.cwiseProduct(it.s) - VectorXd::Constant(it.x.size(), sigma * mu);
  r.cache_norms();
  return r;
}

inline Residuals compute_residuals(const NonlinearProgram& prog, const Iterate& it, double sigma) {
  if (it.x.size() != prog.n() || it.s.size() != prog.n() || it.y.size() != prog.m())
    throw DimensionMismatch("iterate sizes do not match program");
  Residuals r;
  r.sigma = sigma;
  r.r_p = prog.A * it.x - prog.b;
  r.r_d = prog.grad(it.x) + prog.A.transpose() * it.y - it.s;
  const double mu = duality_gap(it);
  r.r_c = it.x.cwiseProduct(it.s) - VectorXd::Constant(it.x.size(), sigma * mu);
  r.cache_norms();
  return r;
}

// Which Newton system a KktSystem holds.
//  full:    [-Q A' I; A 0 0; S 0 X] on (dx, dy, ds), dimension 2n+m
//  reduced: [H+theta*I A'; A 0] on (dx, dy), dimension n+m, ds recovered after
//  ecnp:    [H+theta*I A'; A 0] on (dx, dy) for the equality-phase map
enum class KktForm { full, reduced, ecnp };

struct KktSystem {
  MatrixXd K;
  VectorXd rhs;
  KktForm form = KktForm::full;
  int n = 0;  // primal block size
  int m = 0;  // constraint block size
};

namespace detail {
inline void require_interior(const Iterate& it, const char* where) {
  if (!it.is_interior())
    throw NonInteriorIterate(std::string(where) + " needs x > 0 and s > 0");
}
}  // namespace detail

// Full Newton system on (dx, dy, ds). Right-hand side is the negated residual
// triple, i.e. complementarity block sigma*mu*e - XSe.
inline KktSystem assemble_kkt_full(const QuadraticProgram& qp, const Iterate& it, double sigma) {
  detail::require_interior(it, "assemble_kkt_full");
  const int n = qp.n(), m = qp.m();
  Residuals res = compute_residuals(qp, it, sigma);
  const double mu = duality_gap(it);

  KktSystem sys;
  sys.form = KktForm::full;
  sys.n = n;
  sys.m = m;
  sys.K = MatrixXd::Zero(2 * n + m, 2 * n + m);
  sys.K.block(0, 0, n, n) = -qp.Q;
  sys.K.block(0, n, n, m) = qp.A.transpose();
  sys.K.block(0, n + m, n, n) = MatrixXd::Identity(n, n);
  sys.K.block(n, 0, m, n) = qp.A;
  sys.K.block(n + m, 0, n, n) = it.s.asDiagonal();
  sys.K.block(n + m, n + m, n, n) = it.x.asDiagonal();

  sys.rhs = VectorXd::Zero(2 * n + m);
  sys.rhs.segment(0, n) = -res.r_d;
  sys.rhs.segment(n, m) = -res.r_p;
  sys.rhs.segment(n + m, n) =
      VectorXd::Constant(n, sigma * mu) - it.x.cwiseProduct(it.s);
  return sys;
}

// Reduced system on (dx, dy) after eliminating ds:
//   [H + theta*I  A'; A  0] [dx; dy] = [-(grad f + A'y - s) + X^{-1}(sigma*mu*e - XSe); -(Ax - b)]
// with H = hessian(x) + X^{-1}S (hessian_override replaces hessian(x) when a
// quasi-Newton approximation drives the step). theta >= 0 is a ridge on the
// (1,1) block only.
inline KktSystem assemble_kkt_ins(const NonlinearProgram& prog, const Iterate& it, double sigma,
                                  double theta, const MatrixXd* hessian_override = nullptr) {
  detail::require_interior(it, "assemble_kkt_ins");
  if (theta < 0.0) throw DimensionMismatch("theta must be nonnegative");
  const int n = prog.n(), m = prog.m();
  Residuals res = compute_residuals(prog, it, sigma);
  const double mu = duality_gap(it);

  MatrixXd H;
  if (hessian_override != nullptr) {
    if (hessian_override->rows() != n || hessian_override->cols() != n)
      throw DimensionMismatch("Hessian override has wrong shape");
    H = *hessian_override;
  } else {
    H = prog.hessian_checked(it.x);
  }
  H += MatrixXd(it.s.cwiseQuotient(it.x).asDiagonal());
  H.diagonal().array() += theta;

  KktSystem sys;
  sys.form = KktForm::reduced;
  sys.n = n;
  sys.m = m;
  sys.K = MatrixXd::Zero(n + m, n + m);
  sys.K.block(0, 0, n, n) = H;
  sys.K.block(0, n, n, m) = prog.A.transpose();
  sys.K.block(n, 0, m, n) = prog.A;

  const VectorXd v = VectorXd::Constant(n, sigma * mu) - it.x.cwiseProduct(it.s);
  sys.rhs = VectorXd::Zero(n + m);
  sys.rhs.segment(0, n) = -res.r_d + v.cwiseQuotient(it.x);
  sys.rhs.segment(n, m) = -res.r_p;
  return sys;
}

// Back-substitution for the eliminated block:
//   ds = X^{-1}(sigma*mu*e - XSe - S dx)
// so S dx + X ds = sigma*mu*e - XSe holds exactly for the recovered pair.
inline VectorXd recover_delta_s(const Iterate& it, const VectorXd& dx, double sigma) {
  detail::require_interior(it, "recover_delta_s");
  if (dx.size() != it.x.size()) throw DimensionMismatch("dx size does not match iterate");
  const double mu = duality_gap(it);
  const VectorXd v = VectorXd::Constant(it.x.size(), sigma * mu) - it.x.cwiseProduct(it.s);
  return (v - it.s.cwiseProduct(dx)).cwiseQuotient(it.x);
}

// JSON problem file: object with keys "Q", "A" (row-major nested arrays),
// "b", "c" (flat arrays).
inline QuadraticProgram qp_from_json(const nlohmann::json& j) {
  auto to_matrix = [](const nlohmann::json& rows, const char* key) {
    if (!rows.is_array()) throw DimensionMismatch(std::string(key) + " must be an array of rows");
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    Eigen::Index ccount = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    MatrixXd M(r, ccount);
    for (Eigen::Index i = 0; i < r; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != ccount)
        throw DimensionMismatch(std::string(key) + " rows have inconsistent lengths");
      for (Eigen::Index jcol = 0; jcol < ccount; ++jcol) M(i, jcol) = rows[i][jcol].get<double>();
    }
    return M;
  };
  auto to_vector = [](const nlohmann::json& arr, const char* key) {
    if (!arr.is_array()) throw DimensionMismatch(std::string(key) + " must be an array");
    VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = arr[i].get<double>();
    return v;
  };
  for (const char* key : {"Q", "A", "b", "c"})
    if (!j.contains(key)) throw DimensionMismatch(std::string("problem file missing key ") + key);
  return QuadraticProgram(to_matrix(j["Q"], "Q"), to_matrix(j["A"], "A"), to_vector(j["b"], "b"),
                          to_vector(j["c"], "c"));
}

inline nlohmann::ordered_json qp_to_json(const QuadraticProgram& qp) {
  nlohmann::ordered_json j;
  auto matrix_rows = [](const MatrixXd& M) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index jcol = 0; jcol < M.cols(); ++jcol) row.push_back(M(i, jcol));
      rows.push_back(row);
    }
    return rows;
  };
  j["Q"] = matrix_rows(qp.Q);
  j["A"] = matrix_rows(qp.A);
  j["b"] = std::vector<double>(qp.b.data(), qp.b.data() + qp.b.size());
  j["c"] = std::vector<double>(qp.c.data(), qp.c.data() + qp.c.size());
  return j;
}

}  // namespace ipkit
