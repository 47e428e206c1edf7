#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ipkit/errors.hpp"
#include "ipkit/problem.hpp"
#include "ipkit/util.hpp"

namespace ipkit {

// Seed fully determines the instance; generation is bit-reproducible.
struct SampleSpec {
  int sample_id = 0;
  int n_variables = 2;
  int n_constraints = 1;
  std::uint64_t seed = 0;
  std::string family = "simplex-qp";
};

struct GeneratedSample {
  QuadraticProgram qp;
  VectorXd x_star;
  double f_star = 0.0;
};

// Global optimum of min x'Qx/2 + c'x on the unit simplex by exhaustive
// enumeration of free sets: for each candidate support S, solve the
// equality-restricted stationarity system Q_SS x_S + c_S = lambda e,
// e'x_S = 1, keep primal-feasible candidates, and return the best objective.
// The true support always appears in the enumeration, so the minimum over
// feasible candidates is the global optimum. Cost 2^n; guarded to n <= 16.
struct SimplexOptimum {
  VectorXd x;
  double f = 0.0;
  double lambda = 0.0;  // multiplier of the sum constraint
};

inline SimplexOptimum simplex_qp_optimum(const MatrixXd& Q, const VectorXd& c) {
  const int n = static_cast<int>(c.size());
  if (n < 1 || n > 16) throw DimensionMismatch("exhaustive oracle supports 1 <= n <= 16");
  if (Q.rows() != n || Q.cols() != n) throw DimensionMismatch("Q shape mismatch");

  SimplexOptimum best;
  best.f = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    const int k = __builtin_popcount(mask);
    MatrixXd KKT = MatrixXd::Zero(k + 1, k + 1);
    VectorXd rhs(k + 1);
    std::vector<int> idx;
    idx.reserve(k);
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) idx.push_back(j);
    for (int r = 0; r < k; ++r) {
      for (int cidx = 0; cidx < k; ++cidx) KKT(r, cidx) = Q(idx[r], idx[cidx]);
      KKT(r, k) = -1.0;  // -lambda column of the stationarity rows
      KKT(k, r) = 1.0;
      rhs(r) = -c(idx[r]);
    }
    rhs(k) = 1.0;
    Eigen::FullPivLU<MatrixXd> lu(KKT);
    if (!lu.isInvertible()) continue;
    const VectorXd sol = lu.solve(rhs);

    VectorXd x = VectorXd::Zero(n);
    bool feasible = true;
    for (int r = 0; r < k; ++r) {
      if (sol(r) < -1e-12) {
        feasible = false;
        break;
      }
      x(idx[r]) = std::max(sol(r), 0.0);
    }
    if (!feasible) continue;
    const double f = c.dot(x) + 0.5 * x.dot(Q * x);
    if (f < best.f) {
      best.f = f;
      best.x = x;
      best.lambda = sol(k);
    }
  }
  if (!std::isfinite(best.f)) throw SingularSystem("no feasible support found", -1);
  return best;
}

// simplex-lp:  min c'x on the unit simplex, c ~ U[0.5, 1.5] redrawn until the
//              minimum component is unique; optimum is that vertex.
// simplex-qp:  min x'Dx/2 + c'x on the unit simplex with positive diagonal
//              D ~ U[0.5, 2.5] and c ~ U[0.5, 1.5]; optimum from the
//              exhaustive oracle.
inline GeneratedSample generate_sample(const SampleSpec& spec) {
  if (spec.n_variables < 1) throw UnsupportedFamily("n_variables must be >= 1");
  if (spec.n_constraints != 1)
    throw UnsupportedFamily("simplex families use exactly one constraint");
  const int n = spec.n_variables;
  SeededRng rng(spec.seed);

  MatrixXd A = MatrixXd::Ones(1, n);
  VectorXd b = VectorXd::Ones(1);

  if (spec.family == "simplex-lp") {
    VectorXd c(n);
    int arg = 0;
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (int j = 0; j < n; ++j) c(j) = 0.5 + rng.uniform01();
      arg = 0;
      bool unique = true;
      for (int j = 1; j < n; ++j)
        if (c(j) < c(arg)) arg = j;
      for (int j = 0; j < n; ++j)
        if (j != arg && c(j) == c(arg)) unique = false;
      if (unique) break;
    }
    GeneratedSample out{QuadraticProgram(MatrixXd::Zero(n, n), A, b, c), VectorXd::Zero(n),
                        c(arg)};
    out.x_star(arg) = 1.0;
    return out;
  }
  if (spec.family == "simplex-qp") {
    MatrixXd D = MatrixXd::Zero(n, n);
    VectorXd c(n);
    for (int j = 0; j < n; ++j) D(j, j) = 0.5 + 2.0 * rng.uniform01();
    for (int j = 0; j < n; ++j) c(j) = 0.5 + rng.uniform01();
    const SimplexOptimum opt = simplex_qp_optimum(D, c);
    return GeneratedSample{QuadraticProgram(D, A, b, c), opt.x, opt.f};
  }
  throw UnsupportedFamily("unknown family: " + spec.family);
}

// Bounded proximity score in (0, 1], strictly decreasing in |found - true|.
inline double accuracy_metric(double found_f, double true_f) {
  if (!std::isfinite(true_f)) throw ConfigError("true objective must be finite");
  if (!std::isfinite(found_f)) return 0.0;
  return 1.0 / (1.0 + std::abs(found_f - true_f));
}

// Simplex QP family whose conditioning grows with n: diagonal entries spread
// geometrically from 1 to n^spread_power, so the optimum's components spread
// like the inverse and the central path develops sharper turns as n grows.
// Used by the iteration-growth scan. The constraint is sum(x) = n rather than
// 1 so the centered start is exactly x = e at every size.
inline QuadraticProgram scaled_qp_family(int n, double spread_power = 2.0) {
  if (n < 2) throw DimensionMismatch("scaled family needs n >= 2");
  MatrixXd D = MatrixXd::Zero(n, n);
  const double spread = std::pow(static_cast<double>(n), spread_power);
  for (int j = 0; j < n; ++j)
    D(j, j) = std::pow(spread, static_cast<double>(j) / static_cast<double>(n - 1));
  return QuadraticProgram(D, MatrixXd::Ones(1, n), VectorXd::Constant(1, static_cast<double>(n)),
                          VectorXd::Zero(n));
}

}  // namespace ipkit
