#include <catch2/catch_amalgamated.hpp>

#include <ipkit/catalog.hpp>
#include <ipkit/ipm.hpp>
#include <ipkit/trace.hpp>
#include <ipkit/util.hpp>

#include <cstdio>
#include <filesystem>

using namespace ipkit;

TEST_CASE("config validation rejects out-of-range parameters", "[ipm]") {
  IpmConfig cfg;
  REQUIRE_NOTHROW(validate_ipm_config(cfg));
  REQUIRE(effective_sigma(cfg) == Catch::Approx(0.1 * (1.0 - 1e-4)));
  REQUIRE(effective_sigma(cfg) < cfg.tau);  // derived centering sits below tau

  cfg.sigma = 0.25;
  REQUIRE(effective_sigma(cfg) == 0.25);

  SECTION("gamma") {
    cfg.gamma = 1.0;
    REQUIRE_THROWS_AS(validate_ipm_config(cfg), ConfigError);
  }
  SECTION("tau") {
    cfg.tau = 0.0;
    REQUIRE_THROWS_AS(validate_ipm_config(cfg), ConfigError);
  }
  SECTION("sigma") {
    cfg.sigma = 1.5;
    REQUIRE_THROWS_AS(validate_ipm_config(cfg), ConfigError);
  }
  SECTION("eps") {
    cfg.eps_tol = 0.0;
    REQUIRE_THROWS_AS(validate_ipm_config(cfg), ConfigError);
  }
  SECTION("iteration cap may be zero but not negative") {
    cfg.max_iterations = 0;
    REQUIRE_NOTHROW(validate_ipm_config(cfg));
    cfg.max_iterations = -1;
    REQUIRE_THROWS_AS(validate_ipm_config(cfg), ConfigError);
  }
}

TEST_CASE("neighborhood distance uses the variant norm", "[ipm]") {
  Iterate it;
  it.x = VectorXd::Ones(2);
  it.s = (VectorXd(2) << 2.0, 0.5).finished();
  it.y = VectorXd::Zero(1);
  // XSe = (2, 0.5), mu = 1.25, dev = (0.75, -0.75)
  REQUIRE(neighborhood_distance(it, IpmVariant::long_step) == Catch::Approx(0.6));
  REQUIRE(neighborhood_distance(it, IpmVariant::short_step) ==
          Catch::Approx(0.75 * std::sqrt(2.0) / 1.25));

  it.x(0) = 0.0;
  REQUIRE_THROWS_AS(neighborhood_distance(it, IpmVariant::long_step), NonInteriorIterate);
}

TEST_CASE("boundary rule keeps the guaranteed fraction of every component", "[ipm]") {
  SeededRng rng(101);
  const double tau = 0.3;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 4;
    VectorXd x = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.uniform(0.1, 2.0); });
    VectorXd s = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.uniform(0.1, 2.0); });
    VectorXd dx = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.uniform(-2.0, 2.0); });
    VectorXd ds = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.uniform(-2.0, 2.0); });

    const double alpha = fraction_to_boundary(x, dx, s, ds, tau);
    REQUIRE(alpha > 0.0);
    REQUIRE(alpha <= 1.0);
    for (int j = 0; j < n; ++j) {
      REQUIRE(x(j) + alpha * dx(j) >= (1.0 - tau) * x(j) * (1.0 - 1e-12));
      REQUIRE(s(j) + alpha * ds(j) >= (1.0 - tau) * s(j) * (1.0 - 1e-12));
    }
  }

  SECTION("no shrinking component means a full step") {
    VectorXd x = VectorXd::Ones(3), up = VectorXd::Ones(3);
    REQUIRE(fraction_to_boundary(x, up, x, up, tau) == 1.0);
  }
  SECTION("tau outside (0,1) is rejected") {
    VectorXd x = VectorXd::Ones(2);
    REQUIRE_THROWS_AS(fraction_to_boundary(x, x, x, x, 1.0), ConfigError);
  }
}

TEST_CASE("centered start projects onto the constraint plane", "[ipm]") {
  MatrixXd A = MatrixXd::Ones(1, 2);
  VectorXd b = VectorXd::Ones(1);
  Iterate it = make_centered_start(A, b);
  REQUIRE(it.x(0) == Catch::Approx(0.5));
  REQUIRE(it.x(1) == Catch::Approx(0.5));
  REQUIRE(it.s(0) == 1.0);
  REQUIRE(it.y.size() == 1);
  REQUIRE(it.y(0) == 0.0);
  REQUIRE((A * it.x - b).norm() < 1e-14);

  SECTION("shift below the floor is refused") {
    REQUIRE_THROWS_AS(make_centered_start(A, VectorXd::Constant(1, -3.0)), InfeasibleStart);
  }
  SECTION("a larger scale rescues a far-out right-hand side") {
    Iterate big = make_centered_start(A, VectorXd::Constant(1, 40.0), 20.0);
    REQUIRE(big.x.minCoeff() >= 2.0);
    REQUIRE((A * big.x - VectorXd::Constant(1, 40.0)).norm() < 1e-12);
  }
}

TEST_CASE("one step satisfies the gap update identity", "[ipm]") {
  // mu+ = (1 - alpha (1 - sigma)) mu + (alpha/n) e'r + (alpha^2/n) dx'ds
  // holds for any step by algebra; the measured fields must reproduce it.
  const QpEntry* entry = find_qp("dense-qp-n3");
  REQUIRE(entry != nullptr);
  Iterate it = make_centered_start(entry->qp);
  IpmConfig cfg;

  for (int k = 0; k < 5; ++k) {
    IpmStepResult st = ipm_step(entry->qp, it, cfg);
    const double n = entry->qp.n();
    const double predicted = (1.0 - st.alpha * (1.0 - st.sigma)) * st.mu +
                             (st.alpha / n) * st.e_dot_r +
                             (st.alpha * st.alpha / n) * st.dx_dot_ds;
    REQUIRE(st.mu_next == Catch::Approx(predicted).epsilon(1e-12));
    REQUIRE(st.next.is_interior());
    it = st.next;
  }
}

TEST_CASE("short step width engages the guaranteed formula", "[ipm]") {
  const QpEntry* entry = find_qp("simplex-qp-n4");
  REQUIRE(entry != nullptr);
  Iterate it = make_centered_start(entry->qp);
  IpmConfig cfg;
  cfg.variant = IpmVariant::short_step;
  cfg.tau = 0.995;  // boundary rule relaxed so the width term decides
  cfg.sigma = 0.5;

  IpmStepResult st = ipm_step(entry->qp, it, cfg);
  const double n = entry->qp.n();
  const double width = kShortStepEta / (n * (1.0 - st.sigma - st.kappa1_hat));
  REQUIRE(st.alpha <= width * (1.0 + 1e-12));
  REQUIRE(st.alpha > 0.0);
}

TEST_CASE("both variants solve the catalog programs", "[ipm]") {
  for (const auto& entry : qp_catalog()) {
    for (IpmVariant variant : {IpmVariant::long_step, IpmVariant::short_step}) {
      IpmConfig cfg;
      cfg.variant = variant;
      cfg.eps_tol = 1e-6;
      cfg.max_iterations = 2000;
      SolveResult res = ipm_solve(entry.qp, cfg);
      INFO(entry.name << " variant " << (variant == IpmVariant::long_step ? "long" : "short"));
      REQUIRE(res.status == TerminationStatus::converged);
      REQUIRE(res.mu_final <= 1e-6);
      REQUIRE(res.r_p_inf <= 1e-6);
      REQUIRE(res.r_d_inf <= 1e-6);
      REQUIRE(res.objective == Catch::Approx(entry.f_star).margin(2e-5));
      REQUIRE(res.final.x.minCoeff() > 0.0);
    }
  }
}

TEST_CASE("iteration cap of zero reports immediately", "[ipm]") {
  const QpEntry* entry = find_qp("simplex-lp-n2");
  IpmConfig cfg;
  cfg.max_iterations = 0;
  SolveResult res = ipm_solve(entry->qp, cfg);
  REQUIRE(res.status == TerminationStatus::max_iterations);
  REQUIRE(res.iterations == 0);
}

TEST_CASE("trace records cover every iteration with sane fields", "[ipm]") {
  const QpEntry* entry = find_qp("simplex-qp-n2");
  IpmConfig cfg;
  cfg.eps_tol = 1e-6;
  cfg.max_iterations = 2000;
  SolveTrace trace;
  SolveResult res = ipm_solve(entry->qp, cfg, &trace);

  REQUIRE(trace.algorithm == "ipm");
  REQUIRE(static_cast<int>(trace.records.size()) == res.iterations);
  for (size_t i = 0; i < trace.records.size(); ++i) {
    const TraceRecord& r = trace.records[i];
    REQUIRE(r.k == static_cast<int>(i));
    REQUIRE(r.n == 2);
    REQUIRE(r.phase == "interior");
    REQUIRE(r.mu > 0.0);
    REQUIRE(r.alpha > 0.0);
    REQUIRE(r.alpha <= 1.0);
    if (i + 1 < trace.records.size())
      REQUIRE(r.mu_next == Catch::Approx(trace.records[i + 1].mu));
  }
  REQUIRE(trace.records.back().mu_next <= 1e-6);
}

TEST_CASE("trace survives a jsonl round trip", "[ipm]") {
  const QpEntry* entry = find_qp("simplex-lp-n2");
  IpmConfig cfg;
  SolveTrace trace;
  ipm_solve(entry->qp, cfg, &trace);
  REQUIRE_FALSE(trace.records.empty());

  auto path = std::filesystem::temp_directory_path() / "ipkit_trace_roundtrip.jsonl";
  trace.write_jsonl(path);
  SolveTrace back = SolveTrace::read_jsonl(path);
  REQUIRE(back.records.size() == trace.records.size());
  for (size_t i = 0; i < trace.records.size(); ++i) {
    REQUIRE(back.records[i].k == trace.records[i].k);
    REQUIRE(back.records[i].mu == trace.records[i].mu);
    REQUIRE(back.records[i].alpha == trace.records[i].alpha);
    REQUIRE(back.records[i].e_dot_r == trace.records[i].e_dot_r);
    REQUIRE(back.records[i].n == trace.records[i].n);
  }
  std::filesystem::remove(path);

  SECTION("missing required field is flagged with its line") {
    auto bad = std::filesystem::temp_directory_path() / "ipkit_trace_bad.jsonl";
    write_text_file(bad, "{\"k\": 0, \"alpha\": 0.5}\n");
    REQUIRE_THROWS_AS(SolveTrace::read_jsonl(bad), IncompleteTrace);
    std::filesystem::remove(bad);
  }
}

TEST_CASE("csv trace export keeps the pinned header", "[ipm]") {
  SolveTrace trace;
  TraceRecord r;
  r.k = 0;
  r.mu = 0.5;
  r.alpha = 0.25;
  trace.records.push_back(r);
  std::string csv = trace.to_csv();
  REQUIRE(csv.rfind("k,mu,alpha,r_p_inf,r_d_inf,r_c_inf,nbhd_dist,inner_iters,inexactness,wall_ms\n",
                    0) == 0);
  REQUIRE(csv.find("\r") == std::string::npos);
}

TEST_CASE("iterative inner solver still reaches the optimum", "[ipm]") {
  const QpEntry* entry = find_qp("dense-qp-n3");
  IpmConfig cfg;
  cfg.eps_tol = 1e-6;
  cfg.max_iterations = 2000;
  cfg.solver.mode = SolverPolicy::Mode::iterative;
  cfg.solver.preconditioner = SolverPolicy::Precond::jacobi;
  SolveTrace trace;
  SolveResult res = ipm_solve(entry->qp, cfg, &trace);
  REQUIRE(res.status == TerminationStatus::converged);
  REQUIRE(res.objective == Catch::Approx(entry->f_star).margin(2e-5));
  long inners = 0;
  for (const auto& r : trace.records) inners += r.inner_iters;
  REQUIRE(res.inner_iterations == inners);
  REQUIRE(inners > res.iterations);  // krylov steps, not one factorization per step
}
