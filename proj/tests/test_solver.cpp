#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "capcurv/solver.hpp"
#include "test_support.hpp"

using namespace capcurv;

TEST_CASE("even bump fields satisfy the boundary rule and normalize to 1") {
  auto g = make_cap_grid(M_PI / 3, 2, 32, 32);
  ScalarField b2 = robin_bump(g, 2, false);
  CHECK(b2.v.cwiseAbs().maxCoeff() == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(robin_residual(b2).cwiseAbs().maxCoeff() < 5e-3);
  CHECK(evenness_defect(b2) < 1e-13);

  ScalarField b3 = robin_bump(g, 3, true);
  CHECK(evenness_defect(b3) > 0.5);  // odd longitude mode
  // both bumps obey the Robin rule at second order
  double r[2];
  int pass = 0;
  for (int N : {16, 32}) {
    auto gg = make_cap_grid(M_PI / 3, 2, N, 32);
    r[pass++] = robin_residual(robin_bump(gg, 2, false)).cwiseAbs().maxCoeff();
  }
  CHECK(r[0] / r[1] > 3.0);
}

TEST_CASE("homotopy target interpolates from the unit-cap constant to the data") {
  auto g = make_cap_grid(M_PI / 2, 2, 16, 32);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0,
                             [](double t1, double) { return 1.0 + 0.2 * std::cos(t1); });
  Eigen::VectorXd f0 = homotopy_target(f, 1, 0.0);
  Eigen::VectorXd f1 = homotopy_target(f, 1, 1.0);
  Eigen::VectorXd fm = homotopy_target(f, 1, 0.25);
  CHECK((f0.array() - 0.5).abs().maxCoeff() < 1e-15);
  CHECK((f1 - f.v).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((fm - (0.75 * f0 + 0.25 * f1)).cwiseAbs().maxCoeff() < 1e-15);
  // k = 2: binom(2,2) = 1
  CHECK((homotopy_target(f, 2, 0.0).array() - 1.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("residual vanishes identically on exact spherical-cap data") {
  auto g = make_cap_grid(M_PI / 2, 2, 16, 32);
  ScalarField l = ell_field(g);
  const int N = g->N1 * g->N2;
  // k = 1, t = 0: quotient(I) = 1/2 equals the homotopy base point
  ScalarField f1 = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  Eigen::VectorXd R = quotient_residual(l, 1, homotopy_target(f1, 1, 0.0));
  CHECK(R.cwiseAbs().maxCoeff() < 1e-14);
  // k = 2, f_inv = 4: h = 2 l gives sigma_2(2I) = 4 exactly
  ScalarField h2 = l;
  h2.v *= 2.0;
  ScalarField f4 = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 4.0; });
  CHECK(quotient_residual(h2, 2, homotopy_target(f4, 2, 1.0)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(R.size() == N);
}

TEST_CASE("residual rejects data off the grid and operators off the cone") {
  auto g = make_cap_grid(M_PI / 3, 2, 24, 32);
  ScalarField l = ell_field(g);
  Eigen::VectorXd short_f = Eigen::VectorXd::Ones(7);
  CHECK_THROWS_AS(quotient_residual(l, 1, short_f), GridMismatchError);

  ScalarField bad = l;
  bad.v += 3.0 * robin_bump(g, 2, false).v;  // violent bump: A leaves the cone
  Eigen::VectorXd f_t = Eigen::VectorXd::Ones(g->N1 * g->N2);
  try {
    quotient_residual(bad, 1, f_t);
    FAIL("expected NotAdmissibleError");
  } catch (const NotAdmissibleError& e) {
    CHECK(e.min_eigenvalue <= 0.0);
    CHECK(e.node_i >= 0);
    CHECK(e.node_i < g->N1);
    CHECK(e.node_j >= 0);
    CHECK(e.node_j < g->N2);
  }
}

TEST_CASE("jacobian matches finite differences of the residual") {
  auto g = make_cap_grid(M_PI / 3, 2, 20, 32);
  ScalarField h = ell_field(g);
  h.v = 2.0 * h.v + 0.05 * robin_bump(g, 2, false).v + 0.01 * robin_bump(g, 4, true).v;
  ScalarField v = ell_field(g);
  v.v = 0.2 * v.v + 0.7 * coord_field(g, 1).v + 0.4 * robin_bump(g, 2, false).v;
  Eigen::VectorXd f_t = Eigen::VectorXd::Constant(g->N1 * g->N2, 0.8);

  for (int k : {1, 2}) {
    Eigen::SparseMatrix<double> J = quotient_jacobian(h, k);
    Eigen::VectorXd Jv = J * v.v;
    const double eps = 1e-5;
    ScalarField hp = h, hm = h;
    hp.v += eps * v.v;
    hm.v -= eps * v.v;
    Eigen::VectorXd fd =
        (quotient_residual(hp, k, f_t) - quotient_residual(hm, k, f_t)) / (2 * eps);
    const double scale = Jv.cwiseAbs().maxCoeff();
    CHECK((Jv - fd).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, scale));
  }
}

TEST_CASE("first-order Taylor remainder of the residual is quadratic") {
  auto g = make_cap_grid(M_PI / 2.5, 2, 16, 32);
  ScalarField h = ell_field(g);
  h.v *= 1.5;
  ScalarField v = robin_bump(g, 2, false);
  v.v += 0.5 * ell_field(g).v;
  Eigen::VectorXd f_t = Eigen::VectorXd::Constant(g->N1 * g->N2, 0.7);
  Eigen::SparseMatrix<double> J = quotient_jacobian(h, 1);
  Eigen::VectorXd R0 = quotient_residual(h, 1, f_t);
  double rem[2];
  int pass = 0;
  for (double eps : {1e-2, 1e-3}) {
    ScalarField hp = h;
    hp.v += eps * v.v;
    Eigen::VectorXd R1 = quotient_residual(hp, 1, f_t);
    rem[pass++] = (R1 - R0 - eps * (J * v.v)).cwiseAbs().maxCoeff();
  }
  CHECK(rem[0] / rem[1] > 30.0);  // remainder drops like eps^2
}

TEST_CASE("jacobian at the hemisphere unit cap is a quarter of the trace linearization") {
  // A(l) = I exactly at theta = pi/2, so the quotient gradient is I/4 at each
  // node and J v must equal (A_11(v) + A_22(v))/4 via the same folded stencil
  auto g = make_cap_grid(M_PI / 2, 2, 24, 32);
  ScalarField l = ell_field(g);
  Eigen::SparseMatrix<double> J = quotient_jacobian(l, 1);
  for (bool use_sin : {false, true}) {
    ScalarField v = robin_bump(g, 2, use_sin);
    FrameMatrixField Av = radii_operator(v);
    Eigen::VectorXd want = 0.25 * (Av.m11 + Av.m22);
    CHECK(((J * v.v) - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("jacobian commutes with the capillary reflection") {
  auto g = make_cap_grid(M_PI / 3, 2, 16, 32);
  ScalarField h = ell_field(g);
  h.v = 1.2 * h.v + 0.08 * robin_bump(g, 2, false).v;  // capillary-even state
  Eigen::SparseMatrix<double> J = quotient_jacobian(h, 1);
  ScalarField v = robin_bump(g, 4, true);
  v.v += 0.3 * ell_field(g).v;
  ScalarField Jv = h;
  Jv.policy = BoundaryPolicy::none;
  Jv.v = J * v.v;
  ScalarField Jrv = Jv;
  Jrv.v = J * reflect(v).v;
  CHECK((reflect(Jv).v - Jrv.v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("hemisphere with constant data solves to an exact double cap") {
  auto g = make_cap_grid(M_PI / 2, 2, 24, 48);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  SolveReport rep = solve_quotient_equation(g, 1, f);
  ScalarField l = ell_field(g);
  CHECK(rep.final_residual < 1e-10);
  CHECK((rep.h.v - 2.0 * l.v).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(rep.trace.t.back() == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(rep.trace.t.size() <= 10);
  // the residual is linear along the ray c*l, so each continuation step takes
  // at most one Newton iteration after the free initial check
  for (std::size_t s = 0; s < rep.trace.newton_iterations.size(); ++s)
    CHECK(rep.trace.newton_iterations[s] <= 2);
  CHECK(rep.evenness < 1e-12);
}

TEST_CASE("k = 2 hemisphere with constant data 4 also lands on the double cap") {
  auto g = make_cap_grid(M_PI / 2, 2, 16, 32);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 4.0; });
  SolveReport rep = solve_quotient_equation(g, 2, f);
  CHECK(rep.final_residual < 1e-10);
  CHECK((rep.h.v - 2.0 * ell_field(g).v).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("general cap with constant data stays near the double cap") {
  auto g = make_cap_grid(M_PI / 3, 2, 24, 32);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  SolveReport rep = solve_quotient_equation(g, 1, f);
  CHECK(rep.final_residual < 1e-10);
  CHECK((rep.h.v - 2.0 * ell_field(g).v).cwiseAbs().maxCoeff() < 2e-2);
  CHECK(rep.evenness < 1e-12);
  CHECK(rep.kernel_defect[0] > 0.0);
  CHECK(rep.kernel_defect[1] > 0.0);

  EstimateReport er = estimate_oracles(rep.h, 1, f);
  CHECK(er.all());
}

TEST_CASE("a priori estimate oracles sit at equality on the exact double cap") {
  auto g = make_cap_grid(M_PI / 2, 2, 16, 32);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  ScalarField h = ell_field(g);
  h.v *= 2.0;
  EstimateReport er = estimate_oracles(h, 1, f);
  CHECK(er.all());
  // min u = 2 against binom * max f * 1.02 = 2.04
  CHECK(er.u_margin == Catch::Approx(0.04).margin(1e-9));
  // det A = 4 against 4 * 0.98
  CHECK(er.det_margin == Catch::Approx(0.08).margin(1e-9));
  // gradient of a constant is zero against 2 * 1.02
  CHECK(er.gradient_margin == Catch::Approx(2.04).margin(1e-6));

  // shrink the slack to zero and nudge the data: equality cases must fail on
  // the side each inequality points to
  ScalarField f_small = f, f_big = f;
  f_small.v *= 0.999;  // u bound compares min u against binom * max f
  f_big.v *= 1.001;    // det bound compares det A against (binom * f)^{n/k}
  CHECK_FALSE(estimate_oracles(h, 1, f_small, 0.0).u_bound);
  CHECK_FALSE(estimate_oracles(h, 1, f_big, 0.0).det_lower_bound);
}

TEST_CASE("even-bump data solves and passes the estimate oracles") {
  auto g = make_cap_grid(M_PI / 2, 2, 24, 48);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  f.v += 0.1 * robin_bump(g, 2, false).v;
  SolveReport rep = solve_quotient_equation(g, 1, f);
  CHECK(rep.final_residual < 1e-10);
  CHECK(rep.evenness < 1e-12);
  CHECK(radii_operator(rep.h).min_eigenvalue() > 0.0);
  CHECK(estimate_oracles(rep.h, 1, f).all());
  // solution genuinely moves away from the constant-data cap
  CHECK((rep.h.v - 2.0 * ell_field(g).v).cwiseAbs().maxCoeff() > 1e-2);
}

TEST_CASE("target validation guards positivity, parity, and the grid") {
  auto g = make_cap_grid(M_PI / 3, 2, 16, 32);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  SolverOptions opts;

  ScalarField neg = f;
  neg.v[5] = -0.1;
  CHECK_THROWS_AS(solve_quotient_equation(g, 1, neg, opts), PositivityError);

  ScalarField odd = f;
  odd.v += 0.3 * robin_bump(g, 3, false).v;
  CHECK_THROWS_AS(solve_quotient_equation(g, 1, odd, opts), EvennessError);

  auto g2 = make_cap_grid(M_PI / 3, 2, 24, 32);
  CHECK_THROWS_AS(solve_quotient_equation(g2, 1, f, opts), GridMismatchError);
  CHECK_THROWS_AS(solve_quotient_equation(g, 5, f, opts), ArgumentError);
}

TEST_CASE("continuation reports where it got stuck when newton is starved") {
  auto g = make_cap_grid(M_PI / 2, 2, 16, 32);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  SolverOptions opts;
  opts.max_newton = 0;  // initial point passes at t = 0, every later step fails
  try {
    solve_quotient_equation(g, 1, f, opts);
    FAIL("expected ContinuationStuckError");
  } catch (const ContinuationStuckError& e) {
    CHECK(e.t_reached == Catch::Approx(0.0).margin(1e-14));
    CHECK(e.last_step < opts.t_step_min);
  }
}

TEST_CASE("kernel defect of the linearization decays at second order") {
  double defect[2];
  int pass = 0;
  for (int N : {16, 32}) {
    auto g = make_cap_grid(M_PI / 3, 2, N, 2 * N);
    ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
    SolveReport rep = solve_quotient_equation(g, 1, f);
    defect[pass++] = std::max(rep.kernel_defect[0], rep.kernel_defect[1]);
  }
  CHECK(defect[0] / defect[1] > 3.0);
}

TEST_CASE("perturbed restarts land on the same discrete solution") {
  auto g = make_cap_grid(M_PI / 2, 2, 20, 32);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  f.v += 0.03 * robin_bump(g, 2, false).v;
  SolverOptions opts;
  UniquenessReport ur = uniqueness_probe(g, 1, f, opts, 3, 20260819);
  CHECK(ur.converged == 3);
  CHECK(ur.max_pairwise < 1e-8);
}

TEST_CASE("horizontal moments of the target data report its asymmetry") {
  auto g = make_cap_grid(M_PI / 2, 2, 48, 96);

  // constant and capillary-even data integrate to zero against both fields
  ScalarField one = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  auto m = integral_condition(one);
  CHECK(std::abs(m[0]) < 1e-12);
  CHECK(std::abs(m[1]) < 1e-12);

  ScalarField even = one;
  even.v += 0.4 * robin_bump(g, 2, false).v;
  CHECK(evenness_defect(even) < 1e-14);
  m = integral_condition(even);
  CHECK(std::abs(m[0]) < 1e-12);
  CHECK(std::abs(m[1]) < 1e-12);

  // a component along the first kernel field shows up only in the first slot
  ScalarField tilted = one;
  tilted.v += 0.5 * coord_field(g, 1).v;
  m = integral_condition(tilted);
  CHECK(m[0] == Catch::Approx(M_PI / 3.0).margin(1e-3));
  CHECK(std::abs(m[1]) < 1e-12);
}

TEST_CASE("continuation trace records residuals and margins per accepted step") {
  auto g = make_cap_grid(M_PI / 3, 2, 16, 32);
  ScalarField f = make_field(g, BoundaryPolicy::none, 0.0, [](double, double) { return 1.0; });
  SolveReport rep = solve_quotient_equation(g, 1, f);
  REQUIRE(rep.trace.t.size() >= 2);
  CHECK(rep.trace.residual_norms.size() == rep.trace.t.size());
  CHECK(rep.trace.convexity_margins.size() == rep.trace.t.size());
  for (double r : rep.trace.residual_norms) CHECK(r < 1e-10);
  // the family stays uniformly convex along the homotopy to the unit target
  for (double c : rep.trace.convexity_margins) CHECK(c > 0.2);
}
