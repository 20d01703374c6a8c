#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "capcurv/capdomain.hpp"
#include "capcurv/errors.hpp"
#include "capcurv/solver.hpp"
#include "capcurv/symfun.hpp"

// Perturbative construction showing the curvature-moment obstruction: starting
// from the spherical cap, a variation field v with mean curvature data g that
// is orthogonal to the horizontal kernel fields yet odd under the capillary
// reflection produces a family h_t = ell + t v whose normalized curvature
// quotient picks up a nonzero first moment at order t^2. Everything here runs
// on the same discrete operators as the solver, so the structural identities
// (kernel orthogonality, mode decoupling, the affine convexity margin) hold to
// machine precision rather than only up to scheme error.

namespace capcurv {

/// Smooth plateau cutoff: 1 on |s| <= 1/2, 0 on |s| >= 3/4, and in between the
/// standard exp-mollifier ramp psi(3/4-|s|) / (psi(3/4-|s|) + psi(|s|-1/2))
/// with psi(x) = exp(-1/x). Infinitely differentiable, symmetric about the
/// midpoint s = 5/8 where it equals exactly 1/2.
inline double cutoff_eta(double s) {
  s = std::abs(s);
  if (s <= 0.5) return 1.0;
  if (s >= 0.75) return 0.0;
  const auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  const double up = psi(0.75 - s);
  return up / (up + psi(s - 0.5));
}

/// Longitude profile driving the asymmetric family: modes two and three are
/// orthogonal to the horizontal kernel fields (mode one) node for node, while
/// the sine mode flips under the capillary reflection theta_2 -> theta_2 + pi.
/// On higher-dimensional caps the transverse latitudes would carry cutoff_eta
/// factors; on the two-dimensional cap that product is empty.
inline ScalarField g_field(GridPtr g) {
  return make_field(g, BoundaryPolicy::none, 0.0, [](double, double t2) {
    return std::cos(2.0 * t2) + std::sin(3.0 * t2);
  });
}

/// Variation field returned by the linearized solve, with the consistency
/// diagnostics of the bordered system it came from.
struct LinearizedSolve {
  ScalarField v;                      // solves (Delta + n) v = n g, Robin rule
  std::array<double, 2> multipliers;  // kernel-column multipliers, ~ roundoff
  double residual = 0.0;              // max-norm of (Delta + n) v - n g
};

/// Solve (Delta + n) v = n g with the Robin boundary rule folded into the
/// stencil. The operator annihilates the horizontal coordinate fields, so the
/// plain system is (nearly) singular; bordering it with those fields as extra
/// columns and their weighted moments as extra rows makes it uniquely solvable
/// and pins <v, phi_alpha> = 0. Compatibility of the data with the kernel is
/// prechecked; for the two-mode profile the multipliers then vanish exactly by
/// longitude-mode decoupling, and that is verified after the solve.
inline LinearizedSolve solve_linearized(const ScalarField& gdat) {
  const CapGrid& g = *gdat.grid;
  const int n = g.n;
  const int N = g.N1 * g.N2;

  double data_l1 = 0.0;
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) data_l1 += g.w_row[i] * std::abs(gdat.v[g.index(i, j)]);
  for (int alpha = 1; alpha <= 2; ++alpha) {
    const ScalarField phi = coord_field(gdat.grid, alpha);
    double m = 0.0;
    for (int i = 0; i < g.N1; ++i)
      for (int j = 0; j < g.N2; ++j) {
        const int p = g.index(i, j);
        m += g.w_row[i] * phi.v[p] * gdat.v[p];
      }
    if (std::abs(m) > 1e-8 * data_l1)
      throw FredholmCompatibilityError(
          "solve_linearized: data has a component along a kernel field");
  }

  LinearizedSolve out;
  out.v = make_robin_field(gdat.grid);
  const double rim = robin_ghost_factor(out.v);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(10 * N);
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const int row = g.index(i, j);
      detail::hessian_stencil(g, rim, i, j, [&](int p, double c11, double, double c22) {
        if (c11 != 0.0 || c22 != 0.0) trip.emplace_back(row, p, c11 + c22);
      });
      trip.emplace_back(row, row, static_cast<double>(n));
    }
  Eigen::SparseMatrix<double> L(N, N);
  L.setFromTriplets(trip.begin(), trip.end());

  const Eigen::SparseMatrix<double> M = detail::bordered_system(L, g, gdat.grid);
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success)
    throw NoConvergenceError("solve_linearized: bordered system is singular", 0.0, 0);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N + 2);
  b.head(N) = static_cast<double>(n) * gdat.v;
  const Eigen::VectorXd x = lu.solve(b);

  out.v.v = x.head(N);
  out.multipliers = {x[N], x[N + 1]};
  const double gmax = gdat.v.cwiseAbs().maxCoeff();
  if (std::abs(out.multipliers[0]) > 1e-6 * gmax || std::abs(out.multipliers[1]) > 1e-6 * gmax)
    throw NoConvergenceError("solve_linearized: kernel multipliers failed the consistency bound",
                             std::max(std::abs(out.multipliers[0]), std::abs(out.multipliers[1])),
                             0);

  const FrameMatrixField A = radii_operator(out.v);
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const int p = g.index(i, j);
      out.residual =
          std::max(out.residual, std::abs(A.m11[p] + A.m22[p] - static_cast<double>(n) * gdat.v[p]));
    }
  return out;
}

/// Member of the perturbed family h_t = ell + t v together with its convexity
/// bookkeeping in the affine model identity + t B, B = Hess v + v sigma. The
/// margin is exactly affine in t; the window threshold is where it hits zero.
struct FamilyMember {
  ScalarField h;
  double t = 0.0;
  double margin = 1.0;
  double t_max = std::numeric_limits<double>::infinity();
};

inline FamilyMember family_member(const ScalarField& v, double t) {
  if (!(t >= 0.0)) throw ArgumentError("family_member: t must be nonnegative");
  const FrameMatrixField B = radii_operator(v);
  const double drop = std::max(0.0, -B.min_eigenvalue());
  FamilyMember out;
  out.t = t;
  out.t_max = drop > 0.0 ? 1.0 / drop : std::numeric_limits<double>::infinity();
  out.margin = 1.0 - t * drop;
  if (!(out.margin > 0.0))
    throw AdmissibilityWindowError("family_member: t outside the convexity window", out.t_max);
  out.h = ell_field(v.grid);
  out.h.v += t * v.v;
  return out;
}

/// Weighted moment of the i-th normalized elementary symmetric function of the
/// variation operator B = Hess v + v sigma against a horizontal kernel field.
/// Vanishes in the continuum for every admissible pair; discretely the pairs
/// whose integrand has no surviving longitude mode vanish to roundoff and the
/// rest decay at second order under refinement.
inline double minkowski_identity_check(const ScalarField& v, int i, int alpha) {
  const CapGrid& g = *v.grid;
  if (i < 1 || i > g.n) throw ArgumentError("minkowski_identity_check: order outside 1..n");
  if (alpha < 1 || alpha > g.n) throw ArgumentError("minkowski_identity_check: alpha outside 1..n");
  const FrameMatrixField B = radii_operator(v);
  const ScalarField phi = coord_field(v.grid, alpha);
  double acc = 0.0;
  for (int a = 0; a < g.N1; ++a)
    for (int b = 0; b < g.N2; ++b) {
      const int p = g.index(a, b);
      const double hi = (i == 1) ? 0.5 * (B.m11[p] + B.m22[p])
                                 : B.m11[p] * B.m22[p] - B.m12[p] * B.m12[p];
      acc += g.w_row[a] * hi * phi.v[p];
    }
  return acc;
}

/// First moment of the normalized curvature quotient of h against a horizontal
/// kernel field: integrate( binom(n,k) sigma_n/sigma_{n-k}(A(h)) phi_alpha ).
/// This is the functional whose nonvanishing on the perturbed family is the
/// whole point of the construction.
inline double curvature_moment(const ScalarField& h, int k, int alpha) {
  const CapGrid& g = *h.grid;
  if (k < 1 || k > g.n) throw ArgumentError("curvature_moment: k outside 1..n");
  if (alpha < 1 || alpha > g.n) throw ArgumentError("curvature_moment: alpha outside 1..n");
  const FrameMatrixField A = radii_operator(h);
  const ScalarField phi = coord_field(h.grid, alpha);
  const double scale = static_cast<double>(binom(g.n, k));
  double acc = 0.0;
  for (int a = 0; a < g.N1; ++a)
    for (int b = 0; b < g.N2; ++b) {
      const double me = A.min_eig(a, b);
      if (!(me > 0.0))
        throw LostConvexityError("curvature_moment: operator left the positive cone");
      const int p = g.index(a, b);
      const QuotientGradient2 q = hessian_quotient_2x2(A.m11[p], A.m12[p], A.m22[p], k);
      acc += g.w_row[a] * scale * q.value * phi.v[p];
    }
  return acc;
}

struct ExpansionConfig {
  double theta = 1.5707963267948966;  // pi/2
  int n = 2;
  int k = 1;
  int N1 = 64;
  int N2 = 128;
  std::vector<double> t_samples;  // empty: {.01,.02,.04,.08} scaled into the window
};

struct CounterexampleRun {
  double theta = 0.0;
  int n = 2;
  int k = 1;
  std::vector<double> t_samples;
  std::vector<double> I_values;
  std::vector<double> convexity_margins;
  double t_max = 0.0;
  double fitted_c2 = 0.0;      // t^2 coefficient of the two-term fit
  double fitted_c3 = 0.0;      // t^3 remainder coefficient of the same fit
  double fitted_linear = 0.0;  // t coefficient of the diagnostic three-term fit
  double target_c2 = 0.0;      // -k(n-k) integrate(phi_1 g^2)
  std::array<double, 4> minkowski_residuals{};  // (i,alpha) = (1,1),(1,2),(2,1),(2,2)
  bool c2_ok = false;           // fitted c2 within 5% of the quadrature target
  bool linear_ok = false;       // diagnostic linear coefficient numerically absent
  bool minkowski_ok = false;    // identity residuals at roundoff / scheme size
  bool nonvanishing_ok = false; // sampled moments all carry the predicted sign
  bool pass = false;
};

/// Run the whole construction on one grid: solve for the variation field,
/// sample the curvature moment along the family, fit I(t) = c2 t^2 + c3 t^3,
/// and compare c2 against the quadrature of its closed-form target. The linear
/// coefficient of a diagnostic three-term fit must come out numerically zero:
/// the first-order term of the expansion integrates away against the kernel
/// field, and discretely it cancels exactly by mode orthogonality.
inline CounterexampleRun expansion_verify(const ExpansionConfig& cfg) {
  if (cfg.k < 1 || cfg.k >= cfg.n)
    throw ArgumentError("expansion_verify: k must lie in 1..n-1");
  auto grid = make_cap_grid(cfg.theta, cfg.n, cfg.N1, cfg.N2);
  const CapGrid& g = *grid;
  const ScalarField gdat = g_field(grid);
  const LinearizedSolve ls = solve_linearized(gdat);

  CounterexampleRun run;
  run.theta = cfg.theta;
  run.n = cfg.n;
  run.k = cfg.k;

  const FrameMatrixField B = radii_operator(ls.v);
  const double drop = std::max(0.0, -B.min_eigenvalue());
  run.t_max = drop > 0.0 ? 1.0 / drop : std::numeric_limits<double>::infinity();

  run.t_samples = cfg.t_samples;
  if (run.t_samples.empty()) {
    const double shrink =
        std::isfinite(run.t_max) ? std::min(1.0, 0.5 * run.t_max / 0.08) : 1.0;
    run.t_samples = {0.01 * shrink, 0.02 * shrink, 0.04 * shrink, 0.08 * shrink};
  }
  if (run.t_samples.size() < 4)
    throw ArgumentError("expansion_verify: need at least four t samples for the fit");

  for (double t : run.t_samples) {
    const FamilyMember fm = family_member(ls.v, t);
    run.convexity_margins.push_back(fm.margin);
    run.I_values.push_back(curvature_moment(fm.h, cfg.k, 1));
  }

  const ScalarField phi1 = coord_field(grid, 1);
  double m2 = 0.0;
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const int p = g.index(i, j);
      m2 += g.w_row[i] * phi1.v[p] * gdat.v[p] * gdat.v[p];
    }
  run.target_c2 = -static_cast<double>(cfg.k * (cfg.n - cfg.k)) * m2;

  const int S = static_cast<int>(run.t_samples.size());
  Eigen::MatrixXd D2(S, 2), D3(S, 3);
  Eigen::VectorXd y(S);
  for (int s = 0; s < S; ++s) {
    const double t = run.t_samples[s];
    D2(s, 0) = t * t;
    D2(s, 1) = t * t * t;
    D3(s, 0) = t;
    D3(s, 1) = t * t;
    D3(s, 2) = t * t * t;
    y[s] = run.I_values[s];
  }
  const Eigen::Vector2d c2fit = D2.colPivHouseholderQr().solve(y);
  const Eigen::Vector3d c3fit = D3.colPivHouseholderQr().solve(y);
  run.fitted_c2 = c2fit[0];
  run.fitted_c3 = c2fit[1];
  run.fitted_linear = c3fit[0];

  run.minkowski_residuals = {
      minkowski_identity_check(ls.v, 1, 1), minkowski_identity_check(ls.v, 1, 2),
      minkowski_identity_check(ls.v, 2, 1), minkowski_identity_check(ls.v, 2, 2)};

  // verdict: quadratic coefficient on target, linear term numerically absent,
  // structural identity residuals at roundoff, the genuine one at scheme size,
  // and the sampled moments all nonvanishing with the predicted sign
  // the genuine identity residual measures ~0.5 d2^2 on the deepest cap at the
  // standard 1:2 grid aspect and shrinks with theta; 1.5x headroom on that
  const double tc = std::abs(run.target_c2);
  const double mink_decay_tol = 0.6 * (g.d1 * g.d1 + g.d2 * g.d2);
  run.c2_ok = std::abs(run.fitted_c2 - run.target_c2) <= 0.05 * tc;
  run.linear_ok = std::abs(run.fitted_linear) <= 1e-3 * tc;
  run.minkowski_ok = std::abs(run.minkowski_residuals[0]) <= 1e-8 &&
                     std::abs(run.minkowski_residuals[1]) <= 1e-8 &&
                     std::abs(run.minkowski_residuals[3]) <= 1e-8 &&
                     std::abs(run.minkowski_residuals[2]) <= mink_decay_tol;
  run.nonvanishing_ok = true;
  for (int s = 0; s < S; ++s) {
    const double t = run.t_samples[s];
    run.nonvanishing_ok = run.nonvanishing_ok && run.I_values[s] * run.target_c2 > 0.0 &&
                          std::abs(run.I_values[s]) >= 0.5 * tc * t * t;
  }
  run.pass = run.c2_ok && run.linear_ok && run.minkowski_ok && run.nonvanishing_ok;
  return run;
}

}  // namespace capcurv
