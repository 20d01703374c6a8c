#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <random>
#include <cmath>
#include <vector>

#include "capcurv/capdomain.hpp"
#include "capcurv/errors.hpp"
#include "capcurv/symfun.hpp"

// Damped Newton with pseudo-arclength-free linear continuation for the
// curvature-quotient equation
//   sigma_n(A(h)) / sigma_{n-k}(A(h)) = f_t,   A(h) = Hess h + h sigma,
// on the capillary cap grid, with the Robin rule grad_mu h = cot(theta) h
// built into the ghost rows. The homotopy target is
//   f_t = (1 - t)/binom(n, k) + t f_inv,
// whose t = 0 solution is the unit cap h = l.
//
// The tangential translations phi_1, phi_2 span an exact kernel of the
// linearized continuum operator, so the Newton systems are solved in bordered
// form: two extra columns (the kernel fields) and two quadrature-weighted
// orthogonality rows. On capillary-even data the bordered step coincides with
// the plain Newton step restricted to the even subspace.

namespace capcurv {

struct SolverOptions {
  double newton_tol = 1e-10;  // max-norm residual target
  int max_newton = 30;
  double t_step_init = 0.1;
  double t_step_min = 1e-4;
  double damping = 0.5;          // line-search backtracking factor
  double min_line_step = 1e-4;   // give up below this step fraction
  double convexity_floor = 1e-8; // reject iterates with min eig(A) below this
  bool enforce_even = true;      // project iterates onto the even subspace
};

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double residual_norm = std::numeric_limits<double>::infinity();
};

struct ContinuationTrace {
  std::vector<double> t;
  std::vector<int> newton_iterations;
  std::vector<double> residual_norms;     // accepted residual per step
  std::vector<double> convexity_margins;  // min eigenvalue of A(h) per step
};

struct SolveReport {
  ScalarField h;
  int k = 1;
  double final_residual = 0.0;
  ContinuationTrace trace;
  int total_newton_iterations = 0;
  double kernel_defect[2] = {0.0, 0.0};  // area-weighted L1 of J phi_alpha
  double evenness = 0.0;
};

/// Normalized even bump b(theta_1) cos/sin(m theta_2) with
/// b = sin^2(theta_1) exp(-cot(theta) theta_1): satisfies the Robin rule
/// exactly for every m, peaks at 1 in absolute value on the grid.
inline ScalarField robin_bump(GridPtr g, int m, bool use_sin = false) {
  if (m < 0) throw ArgumentError("robin_bump: mode must be nonnegative");
  const double ct = 1.0 / std::tan(g->theta);
  ScalarField F = make_field(g, BoundaryPolicy::robin, ct, [&](double t1, double t2) {
    const double b = std::sin(t1) * std::sin(t1) * std::exp(-ct * t1);
    return b * (use_sin ? std::sin(m * t2) : std::cos(m * t2));
  });
  double peak = 0.0;
  for (int i = 0; i < g->N1; ++i) {
    const double b = std::sin(g->th1[i]) * std::sin(g->th1[i]) * std::exp(-ct * g->th1[i]);
    peak = std::max(peak, std::abs(b));
  }
  F.v /= peak;
  return F;
}

inline void project_even(ScalarField& h) { h.v = 0.5 * (h.v + reflect(h).v); }

/// f_t = (1 - t)/binom(n, k) + t f_inv, as nodal data.
inline Eigen::VectorXd homotopy_target(const ScalarField& f_inv, int k, double t) {
  const int n = f_inv.grid->n;
  const double base = 1.0 / binom(n, k);
  return ((1.0 - t) * base + t * f_inv.v.array()).matrix();
}

/// Horizontal moments of the target data: integrate(<xi, E_alpha> f_inv) for
/// alpha = 1..n. A necessary solvability condition makes these vanish; for
/// capillary-even data they cancel to machine precision by the reflection.
inline std::array<double, 2> integral_condition(const ScalarField& f_inv) {
  const CapGrid& g = *f_inv.grid;
  std::array<double, 2> out{};
  for (int alpha = 1; alpha <= 2; ++alpha) {
    const ScalarField phi = coord_field(f_inv.grid, alpha);
    double acc = 0.0;
    for (int i = 0; i < g.N1; ++i)
      for (int j = 0; j < g.N2; ++j) {
        const int p = g.index(i, j);
        acc += g.w_row[i] * phi.v[p] * f_inv.v[p];
      }
    out[alpha - 1] = acc;
  }
  return out;
}

/// Quotient residual sigma_n/sigma_{n-k}(A(h)) - f_t at every node. Throws
/// NotAdmissibleError as soon as A leaves the positive cone.
inline Eigen::VectorXd quotient_residual(const ScalarField& h, int k,
                                         const Eigen::VectorXd& f_t) {
  const CapGrid& g = *h.grid;
  if (f_t.size() != h.v.size()) throw GridMismatchError("target data does not match the grid");
  const FrameMatrixField A = radii_operator(h);
  Eigen::VectorXd R(h.v.size());
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const double me = A.min_eig(i, j);
      if (!(me > 0.0)) throw NotAdmissibleError("curvature operator left the positive cone", i, j, me);
      const int p = g.index(i, j);
      const QuotientGradient2 q = hessian_quotient_2x2(A.m11[p], A.m12[p], A.m22[p], k);
      R[p] = q.value - f_t[p];
    }
  return R;
}

namespace detail {

/// Enumerate the 9-point stencil of the covariant Hessian components at node
/// (i, j), ghost rows folded back onto grid nodes: the pole ghost maps to the
/// across-pole column with factor 1, the rim ghost to the last row with the
/// boundary-rule multiplier. Emits (flat index, c11, c12, c22) so that
///   H_ab(F)(i, j) = sum over entries of c_ab * F[p].
/// Shared by the Newton Jacobian and the linearized-operator assembly, which
/// keeps every matrix consistent with the sample()-based operators.
template <typename Emit>
void hessian_stencil(const CapGrid& g, double rim_factor, int i, int j, Emit&& emit) {
  const double d1 = g.d1, d2 = g.d2;
  const double s = g.s1[i], ct = g.ct1[i];
  auto fold = [&](int ii, int jj, double c11, double c12, double c22) {
    double f = 1.0;
    jj = g.wrap(jj);
    if (ii == -1) {
      ii = 0;
      jj = g.across_pole(jj);
    } else if (ii == g.N1) {
      ii = g.N1 - 1;
      f = rim_factor;
    }
    emit(g.index(ii, jj), f * c11, f * c12, f * c22);
  };
  const double a11 = 1.0 / (d1 * d1);
  const double a22 = 1.0 / (s * s * d2 * d2);
  const double corner = 1.0 / (4.0 * d1 * d2 * s);
  const double edge12 = ct / (2.0 * d2 * s);
  const double edge22 = ct / (2.0 * d1);
  fold(i + 1, j, a11, 0.0, edge22);
  fold(i - 1, j, a11, 0.0, -edge22);
  fold(i, j, -2.0 * a11, 0.0, -2.0 * a22);
  fold(i, j + 1, 0.0, -edge12, a22);
  fold(i, j - 1, 0.0, edge12, a22);
  fold(i + 1, j + 1, 0.0, corner, 0.0);
  fold(i + 1, j - 1, 0.0, -corner, 0.0);
  fold(i - 1, j + 1, 0.0, -corner, 0.0);
  fold(i - 1, j - 1, 0.0, corner, 0.0);
}

}  // namespace detail

/// Jacobian of the quotient residual with respect to the nodal values of h:
/// row p carries Ghat(A(p)) : dA/dh_q over the folded stencil, where Ghat is
/// the derivative of the curvature quotient at the current operator value.
inline Eigen::SparseMatrix<double> quotient_jacobian(const ScalarField& h, int k) {
  const CapGrid& g = *h.grid;
  const int N = g.N1 * g.N2;
  const FrameMatrixField A = radii_operator(h);
  const double rim = robin_ghost_factor(h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(10 * N);
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const int row = g.index(i, j);
      const QuotientGradient2 q = hessian_quotient_2x2(A.m11[row], A.m12[row], A.m22[row], k);
      detail::hessian_stencil(g, rim, i, j, [&](int p, double c11, double c12, double c22) {
        trip.emplace_back(row, p, q.g11 * c11 + 2.0 * q.g12 * c12 + q.g22 * c22);
      });
      trip.emplace_back(row, row, q.g11 + q.g22);  // the h sigma part of A
    }
  Eigen::SparseMatrix<double> J(N, N);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

/// Area-weighted L1 norm of J phi_alpha for the two tangential translation
/// fields: how far the discrete linearization is from annihilating the
/// continuum kernel. Decays at second order under grid refinement.
inline std::array<double, 2> kernel_defect_l1(const ScalarField& h, int k) {
  const CapGrid& g = *h.grid;
  const Eigen::SparseMatrix<double> J = quotient_jacobian(h, k);
  std::array<double, 2> out{};
  for (int alpha = 1; alpha <= 2; ++alpha) {
    const Eigen::VectorXd d = J * coord_field(h.grid, alpha).v;
    double acc = 0.0;
    for (int i = 0; i < g.N1; ++i)
      for (int j = 0; j < g.N2; ++j) acc += g.w_row[i] * std::abs(d[g.index(i, j)]);
    out[alpha - 1] = acc;
  }
  return out;
}

namespace detail {

inline Eigen::SparseMatrix<double> bordered_system(const Eigen::SparseMatrix<double>& J,
                                                   const CapGrid& g, GridPtr gp) {
  const int N = J.rows();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(J.nonZeros() + 4 * N + 4);
  for (int c = 0; c < J.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(J, c); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int alpha = 0; alpha < 2; ++alpha) {
    const ScalarField phi = coord_field(gp, alpha + 1);
    for (int i = 0; i < g.N1; ++i)
      for (int j = 0; j < g.N2; ++j) {
        const int p = g.index(i, j);
        trip.emplace_back(p, N + alpha, phi.v[p]);             // kernel column
        trip.emplace_back(N + alpha, p, g.w_row[i] * phi.v[p]);  // orthogonality row
      }
  }
  Eigen::SparseMatrix<double> M(N + 2, N + 2);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

struct LinearWorkspace {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
};

}  // namespace detail

/// One damped Newton run at fixed target f_t; h is updated in place only on
/// success. Steps must strictly decrease the max-norm residual and keep the
/// iterate positive with A(h) safely inside the positive cone.
inline NewtonOutcome newton_solve(ScalarField& h, int k, const Eigen::VectorXd& f_t,
                                  const SolverOptions& opts, detail::LinearWorkspace& ws) {
  const CapGrid& g = *h.grid;
  const int N = g.N1 * g.N2;
  ScalarField cur = h;
  if (opts.enforce_even) project_even(cur);
  NewtonOutcome out;
  Eigen::VectorXd R = quotient_residual(cur, k, f_t);
  out.residual_norm = R.cwiseAbs().maxCoeff();
  for (int it = 0; it < opts.max_newton + 1; ++it) {
    if (out.residual_norm < opts.newton_tol) {
      out.converged = true;
      out.iterations = it;
      h = cur;
      return out;
    }
    if (it == opts.max_newton) break;
    const Eigen::SparseMatrix<double> M =
        detail::bordered_system(quotient_jacobian(cur, k), g, cur.grid);
    if (!ws.analyzed) {
      ws.lu.analyzePattern(M);
      ws.analyzed = true;
    }
    ws.lu.factorize(M);
    if (ws.lu.info() != Eigen::Success) return out;  // singular system: give up
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 2);
    rhs.head(N) = -R;
    const Eigen::VectorXd step = ws.lu.solve(rhs);
    if (!step.allFinite()) return out;

    double s = 1.0;
    bool accepted = false;
    while (s >= opts.min_line_step) {
      ScalarField trial = cur;
      trial.v += s * step.head(N);
      if (opts.enforce_even) project_even(trial);
      if (trial.v.minCoeff() > 0.0) {
        try {
          const Eigen::VectorXd Rt = quotient_residual(trial, k, f_t);
          const double nt = Rt.cwiseAbs().maxCoeff();
          const double floor_eig = radii_operator(trial).min_eigenvalue();
          if (nt < out.residual_norm && floor_eig > opts.convexity_floor) {
            cur = trial;
            R = Rt;
            out.residual_norm = nt;
            accepted = true;
            break;
          }
        } catch (const NotAdmissibleError&) {
          // step left the positive cone: damp and retry
        }
      }
      s *= opts.damping;
    }
    if (!accepted) {
      out.iterations = it;
      return out;  // line search stalled
    }
    out.iterations = it + 1;
  }
  return out;
}

/// Validate target data: nodal, positive, and capillary-even when the solver
/// is asked to work in the even subspace.
inline void validate_target(const ScalarField& f_inv, const CapGrid& g, bool enforce_even) {
  if (f_inv.v.size() != static_cast<Eigen::Index>(g.N1) * g.N2)
    throw GridMismatchError("target curvature data does not match the grid");
  if (!(f_inv.v.minCoeff() > 0.0))
    throw PositivityError("target curvature data must be strictly positive");
  if (enforce_even) {
    const double scale = f_inv.v.cwiseAbs().maxCoeff();
    if (evenness_defect(f_inv) > 1e-10 * std::max(1.0, scale))
      throw EvennessError("target curvature data is not capillary-even");
  }
}

/// Continuation driver: from the unit cap at t = 0 to the requested target at
/// t = 1, with step halving on failure and growth after streaks of successes.
inline SolveReport solve_quotient_equation(GridPtr grid, int k, const ScalarField& f_inv,
                                           const SolverOptions& opts = {}) {
  const CapGrid& g = *grid;
  if (k < 1 || k > g.n) throw ArgumentError("curvature order k must lie in 1..n");
  validate_target(f_inv, g, opts.enforce_even);

  SolveReport rep;
  rep.k = k;
  rep.h = ell_field(grid);
  detail::LinearWorkspace ws;

  auto attempt = [&](double t) -> NewtonOutcome {
    ScalarField trial = rep.h;
    NewtonOutcome nw = newton_solve(trial, k, homotopy_target(f_inv, k, t), opts, ws);
    if (nw.converged) {
      rep.h = trial;
      rep.trace.t.push_back(t);
      rep.trace.newton_iterations.push_back(nw.iterations);
      rep.trace.residual_norms.push_back(nw.residual_norm);
      rep.trace.convexity_margins.push_back(radii_operator(trial).min_eigenvalue());
      rep.total_newton_iterations += nw.iterations;
      rep.final_residual = nw.residual_norm;
    }
    return nw;
  };

  if (!attempt(0.0).converged)
    throw ContinuationStuckError("no solution at the start of the homotopy", 0.0,
                                 opts.t_step_init);

  double t = 0.0, dt = opts.t_step_init;
  int streak = 0;
  while (t < 1.0 - 1e-14) {
    const double t_try = std::min(1.0, t + dt);
    if (attempt(t_try).converged) {
      t = t_try;
      if (++streak >= 2) dt *= 1.5;
    } else {
      streak = 0;
      dt *= 0.5;
      if (dt < opts.t_step_min)
        throw ContinuationStuckError("continuation step collapsed", t, dt);
    }
  }
  const auto kd = kernel_defect_l1(rep.h, k);
  rep.kernel_defect[0] = kd[0];
  rep.kernel_defect[1] = kd[1];
  rep.evenness = evenness_defect(rep.h);
  return rep;
}

/// A priori bounds distilled from the continuum theory, with a 2% numerical
/// allowance; a solve whose output violates any of them is rejected upstream.
struct EstimateReport {
  bool u_bound = false;       // (min h/l)^k <= binom(n,k) max f_t
  bool gradient_bound = false;  // max |grad h| <= max h / sin(theta)
  bool det_lower_bound = false; // sigma_n(A) >= (binom(n,k) f_t)^{n/k} pointwise
  double u_margin = 0.0, gradient_margin = 0.0, det_margin = 0.0;
  bool all() const { return u_bound && gradient_bound && det_lower_bound; }
};

inline EstimateReport estimate_oracles(const ScalarField& h, int k, const ScalarField& f_inv,
                                       double slack = 0.02) {
  const CapGrid& g = *h.grid;
  const int n = g.n;
  EstimateReport er;

  const ScalarField l = ell_field(h.grid);
  const double min_u = (h.v.cwiseQuotient(l.v)).minCoeff();
  const double rhs_u = binom(n, k) * f_inv.v.maxCoeff();
  er.u_margin = rhs_u * (1.0 + slack) - std::pow(min_u, k);
  er.u_bound = er.u_margin >= 0.0;

  const double grad_max = covariant_gradient(h).max_norm();
  const double rhs_g = h.v.maxCoeff() / std::sin(g.theta);
  er.gradient_margin = rhs_g * (1.0 + slack) - grad_max;
  er.gradient_bound = er.gradient_margin >= 0.0;

  const FrameMatrixField A = radii_operator(h);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const int p = g.index(i, j);
      const double det = A.m11[p] * A.m22[p] - A.m12[p] * A.m12[p];
      const double bound = std::pow(binom(n, k) * f_inv.v[p], double(n) / k);
      worst = std::min(worst, det - bound * (1.0 - slack));
    }
  er.det_margin = worst;
  er.det_lower_bound = worst >= 0.0;
  return er;
}

struct UniquenessReport {
  int starts = 0;
  int converged = 0;
  double max_pairwise = std::numeric_limits<double>::infinity();
};

/// Re-run the t = 1 Newton solve from several randomly perturbed copies of the
/// continuation solution; with the translations pinned by the bordered rows,
/// all runs must land on the same discrete solution.
inline UniquenessReport uniqueness_probe(GridPtr grid, int k, const ScalarField& f_inv,
                                         const SolverOptions& opts, int n_starts,
                                         std::uint64_t seed) {
  SolveReport base = solve_quotient_equation(grid, k, f_inv, opts);
  const Eigen::VectorXd f_t = homotopy_target(f_inv, k, 1.0);
  std::vector<ScalarField> basis;
  basis.push_back(ell_field(grid));
  basis.push_back(robin_bump(grid, 2, false));
  basis.push_back(robin_bump(grid, 2, true));
  basis.push_back(robin_bump(grid, 4, false));

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  UniquenessReport ur;
  ur.starts = n_starts;
  std::vector<Eigen::VectorXd> sols;
  sols.push_back(base.h.v);
  for (int s = 0; s < n_starts; ++s) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(base.h.v.size());
    for (const auto& b : basis) dir += U(gen) * b.v;
    dir *= base.h.v.cwiseAbs().maxCoeff() / std::max(1e-30, dir.cwiseAbs().maxCoeff());
    double eps = 0.05;
    for (int tries = 0; tries < 12; ++tries, eps *= 0.5) {
      ScalarField start = base.h;
      start.v += eps * dir;
      if (!(start.v.minCoeff() > 0.0)) continue;
      try {
        detail::LinearWorkspace ws;
        NewtonOutcome nw = newton_solve(start, k, f_t, opts, ws);
        if (nw.converged) {
          sols.push_back(start.v);
          ++ur.converged;
          break;
        }
      } catch (const NotAdmissibleError&) {
        // perturbation too violent; retry closer to the solution
      }
    }
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < sols.size(); ++a)
    for (std::size_t b = a + 1; b < sols.size(); ++b)
      worst = std::max(worst, (sols[a] - sols[b]).cwiseAbs().maxCoeff());
  ur.max_pairwise = worst;
  return ur;
}

}  // namespace capcurv
