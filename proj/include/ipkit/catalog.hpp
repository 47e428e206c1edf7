#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ipkit/errors.hpp"
#include "ipkit/families.hpp"
#include "ipkit/problem.hpp"

namespace ipkit {

// Named analytic instances compiled into the binary so tests and the command
// line need no data files. Each quadratic entry carries its known optimum;
// nonlinear entries carry one when it has a closed form.
struct QpEntry {
  std::string name;
  QuadraticProgram qp;
  VectorXd x_star;
  double f_star = 0.0;
};

struct NlpEntry {
  std::string name;
  NonlinearProgram nlp;
  bool truth_known = false;
  VectorXd x_star;
  double f_star = 0.0;
};

namespace detail {

inline QpEntry make_dense_qp_n3() {
  MatrixXd Q(3, 3);
  Q << 2.0, 0.3, 0.1, 0.3, 1.5, 0.2, 0.1, 0.2, 1.8;
  MatrixXd A(2, 3);
  A << 1.0, 1.0, 1.0, 0.0, 1.0, 2.0;
  VectorXd b(2);
  b << 1.0, 1.0;
  VectorXd c(3);
  c << -0.5, -0.2, -0.3;

  // Bounds are inactive at this instance's optimum, so the truth is the
  // equality-constrained stationary point; construction verifies interiority.
  MatrixXd K = MatrixXd::Zero(5, 5);
  K.block(0, 0, 3, 3) = Q;
  K.block(0, 3, 3, 2) = A.transpose();
  K.block(3, 0, 2, 3) = A;
  VectorXd rhs(5);
  rhs << -c, b;
  const VectorXd sol = Eigen::FullPivLU<MatrixXd>(K).solve(rhs);
  const VectorXd x = sol.segment(0, 3);
  if (x.minCoeff() <= 0.0)
    throw SingularSystem("dense-qp-n3 stationary point is not interior", -1);
  QuadraticProgram qp(Q, A, b, c);
  const double f = qp.objective(x);
  return QpEntry{"dense-qp-n3", std::move(qp), x, f};
}

inline std::vector<QpEntry> build_qp_catalog() {
  std::vector<QpEntry> list;

  {
    VectorXd c(2);
    c << 1.0, 2.0;
    VectorXd x(2);
    x << 1.0, 0.0;
    list.push_back(QpEntry{"simplex-lp-n2",
                           QuadraticProgram(MatrixXd::Zero(2, 2), MatrixXd::Ones(1, 2),
                                            VectorXd::Ones(1), c),
                           x, 1.0});
  }
  {
    const int n = 2;
    QuadraticProgram qp(2.0 * MatrixXd::Identity(n, n), MatrixXd::Ones(1, n),
                        VectorXd::Ones(1), VectorXd::Zero(n));
    const VectorXd x = VectorXd::Constant(n, 1.0 / n);
    list.push_back(QpEntry{"simplex-qp-n2", std::move(qp), x, 1.0 / n});
  }
  {
    const int n = 4;
    QuadraticProgram qp(2.0 * MatrixXd::Identity(n, n), MatrixXd::Ones(1, n),
                        VectorXd::Ones(1), VectorXd::Zero(n));
    const VectorXd x = VectorXd::Constant(n, 1.0 / n);
    list.push_back(QpEntry{"simplex-qp-n4", std::move(qp), x, 1.0 / n});
  }
  list.push_back(make_dense_qp_n3());
  return list;
}

inline std::vector<NlpEntry> build_nlp_catalog() {
  std::vector<NlpEntry> list;

  {
    // min sum_i c_i exp(x_i) on the unit simplex. Stationarity gives
    // c_i exp(x_i) constant, so x_i = L - log c_i with L = (1 + sum log c)/n
    // and f* = n exp(L); the optimum is strictly interior for these weights.
    VectorXd c(3);
    c << 1.0, 1.3, 1.7;
    const double L = (1.0 + std::log(c(0)) + std::log(c(1)) + std::log(c(2))) / 3.0;
    VectorXd x_star(3);
    for (int i = 0; i < 3; ++i) x_star(i) = L - std::log(c(i));
    NonlinearProgram nlp(
        [c](const VectorXd& x) { return (c.array() * x.array().exp()).sum(); },
        [c](const VectorXd& x) -> VectorXd { return c.array() * x.array().exp(); },
        [c](const VectorXd& x) -> MatrixXd {
          return (c.array() * x.array().exp()).matrix().asDiagonal();
        },
        MatrixXd::Ones(1, 3), VectorXd::Ones(1));
    list.push_back(NlpEntry{"exp-simplex-n3", std::move(nlp), true, x_star, 3.0 * std::exp(L)});
  }
  {
    VectorXd t(3);
    t << 0.2, 0.5, 0.8;
    NonlinearProgram nlp(
        [t](const VectorXd& x) {
          return (x - t).array().pow(4).sum() + 0.5 * x.squaredNorm();
        },
        [t](const VectorXd& x) -> VectorXd {
          return (4.0 * (x - t).array().pow(3)).matrix() + x;
        },
        [t](const VectorXd& x) -> MatrixXd {
          return (12.0 * (x - t).array().pow(2) + 1.0).matrix().asDiagonal();
        },
        MatrixXd::Ones(1, 3), VectorXd::Ones(1));
    list.push_back(NlpEntry{"quartic-n3", std::move(nlp), false, VectorXd(), 0.0});
  }
  return list;
}

}  // namespace detail

inline const std::vector<QpEntry>& qp_catalog() {
  static const std::vector<QpEntry> catalog = detail::build_qp_catalog();
  return catalog;
}

inline const std::vector<NlpEntry>& nlp_catalog() {
  static const std::vector<NlpEntry> catalog = detail::build_nlp_catalog();
  return catalog;
}

inline const QpEntry* find_qp(const std::string& name) {
  for (const auto& e : qp_catalog())
    if (e.name == name) return &e;
  return nullptr;
}

inline const NlpEntry* find_nlp(const std::string& name) {
  for (const auto& e : nlp_catalog())
    if (e.name == name) return &e;
  return nullptr;
}

inline std::vector<std::string> catalog_names() {
  std::vector<std::string> names;
  for (const auto& e : qp_catalog()) names.push_back(e.name);
  for (const auto& e : nlp_catalog()) names.push_back(e.name);
  return names;
}

}  // namespace ipkit
