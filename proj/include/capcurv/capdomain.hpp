#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <vector>

#include "capcurv/errors.hpp"

// Discrete spherical cap: a staggered latitude-longitude grid on
//   C_theta = { unit vectors at polar angle theta_1 <= theta },
// scalar fields on it with ghost-node boundary rules, and the covariant
// calculus (gradient, Hessian, curvature operator A = Hess h + h*sigma) in the
// orthonormal frame {d/dtheta_1, (1/sin theta_1) d/dtheta_2}.
//
// Latitudes sit at (i + 1/2) * theta/N1, so no node touches the pole or the
// boundary circle. Ghost rows come from two identifications:
//   pole:      F(-t, p) = F(t, p + pi), exact for any function on the cap;
//   boundary:  midpoint Robin rule (F_g - F_b)/d1 = coef * (F_g + F_b)/2,
// or, for fields satisfying no boundary condition, cubic extrapolation.

namespace capcurv {

struct CapGrid {
  double theta = 0.0;
  int n = 0;   // hypersurface dimension; the reference grid is n = 2
  int N1 = 0;  // latitude rows
  int N2 = 0;  // longitude columns (even, periodic)
  double d1 = 0.0, d2 = 0.0;

  std::vector<double> th1, s1, c1, ct1;  // per-row theta_1, sin, cos, cot
  std::vector<double> w_row;             // quadrature weight per row node
  std::vector<double> th2, s2, c2;       // per-column theta_2, sin, cos

  int index(int i, int j) const { return i * N2 + j; }
  int wrap(int j) const {
    j %= N2;
    return j < 0 ? j + N2 : j;
  }
  int across_pole(int j) const { return (j + N2 / 2) % N2; }

  /// Closed-form cap area 2*pi*(1 - cos theta); the quadrature must converge
  /// to this at second order.
  double cap_area() const { return 2.0 * M_PI * (1.0 - std::cos(theta)); }

  /// FNV-1a over the defining parameters and weights; embedded in every
  /// report so downstream consumers can detect a grid switch.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t len) {
      const unsigned char* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
      }
    };
    mix(&theta, sizeof theta);
    mix(&n, sizeof n);
    mix(&N1, sizeof N1);
    mix(&N2, sizeof N2);
    for (double w : w_row) mix(&w, sizeof w);
    return h;
  }
};

using GridPtr = std::shared_ptr<const CapGrid>;

/// Build the reference grid. Only n = 2 is wired up; the symmetric-function
/// layer underneath is dimension generic.
inline GridPtr make_cap_grid(double theta, int n, int N1, int N2) {
  if (!(theta > 0.0) || theta > M_PI / 2.0 + 1e-15)
    throw UnsupportedAngleError("contact angle must lie in (0, pi/2]");
  if (n != 2) throw ArgumentError("make_cap_grid: only the n = 2 grid is implemented");
  if (N1 < 8) throw ArgumentError("make_cap_grid: N1 must be at least 8");
  if (N2 < 16 || N2 % 2 != 0) throw ArgumentError("make_cap_grid: N2 must be even, >= 16");

  auto g = std::make_shared<CapGrid>();
  g->theta = std::min(theta, M_PI / 2.0);
  g->n = n;
  g->N1 = N1;
  g->N2 = N2;
  g->d1 = g->theta / N1;
  g->d2 = 2.0 * M_PI / N2;
  g->th1.resize(N1);
  g->s1.resize(N1);
  g->c1.resize(N1);
  g->ct1.resize(N1);
  g->w_row.resize(N1);
  for (int i = 0; i < N1; ++i) {
    const double t = (i + 0.5) * g->d1;
    g->th1[i] = t;
    g->s1[i] = std::sin(t);
    g->c1[i] = std::cos(t);
    g->ct1[i] = g->c1[i] / g->s1[i];
    g->w_row[i] = std::pow(g->s1[i], n - 1) * g->d1 * g->d2;
  }
  g->th2.resize(N2);
  g->s2.resize(N2);
  g->c2.resize(N2);
  for (int j = 0; j < N2; ++j) {
    const double p = j * g->d2;
    g->th2[j] = p;
    g->s2[j] = std::sin(p);
    g->c2[j] = std::cos(p);
  }
  return g;
}

enum class BoundaryPolicy {
  robin,                 // ghost from the midpoint Robin rule with robin_coef
  even_reflection_only,  // pole reflection; boundary ghost by extrapolation
  none,                  // right-hand-side data; any ghost access is an error
};

struct ScalarField {
  GridPtr grid;
  BoundaryPolicy policy = BoundaryPolicy::none;
  double robin_coef = 0.0;  // coefficient b in  grad_mu F = b * F  on the rim
  Eigen::VectorXd v;

  double& at(int i, int j) { return v[grid->index(i, j)]; }
  double at(int i, int j) const { return v[grid->index(i, j)]; }
};

/// Boundary rule for the support function itself: grad_mu h = cot(theta) h.
inline ScalarField make_robin_field(GridPtr g) {
  ScalarField F;
  F.grid = g;
  F.policy = BoundaryPolicy::robin;
  F.robin_coef = 1.0 / std::tan(g->theta);
  F.v = Eigen::VectorXd::Zero(g->N1 * g->N2);
  return F;
}

template <typename Fn>
ScalarField make_field(GridPtr g, BoundaryPolicy policy, double robin_coef, Fn&& fn) {
  ScalarField F;
  F.grid = g;
  F.policy = policy;
  F.robin_coef = robin_coef;
  F.v.resize(g->N1 * g->N2);
  for (int i = 0; i < g->N1; ++i)
    for (int j = 0; j < g->N2; ++j) F.v[g->index(i, j)] = fn(g->th1[i], g->th2[j]);
  if (!F.v.allFinite()) throw ArgumentError("make_field: non-finite field values");
  return F;
}

/// l(xi) = sin^2(theta) + cos(theta) <xi, e> = 1 - cos(theta) cos(theta_1).
/// Satisfies the Robin condition exactly, so it carries the robin policy.
inline ScalarField ell_field(GridPtr g) {
  const double ct = std::cos(g->theta);
  auto F = make_field(g, BoundaryPolicy::robin, 1.0 / std::tan(g->theta),
                      [ct](double t1, double) { return 1.0 - ct * std::cos(t1); });
  return F;
}

/// Ambient coordinate of the cap point: <xi, E_alpha>, alpha in 1..n+1.
/// Horizontal components satisfy the Robin condition (they span the kernel of
/// the linearized problem); the vertical one does not and gets extrapolation.
inline ScalarField coord_field(GridPtr g, int alpha) {
  if (alpha < 1 || alpha > g->n + 1) throw ArgumentError("coord_field: alpha outside 1..n+1");
  const double ct = std::cos(g->theta);
  if (alpha == 1)
    return make_field(g, BoundaryPolicy::robin, 1.0 / std::tan(g->theta),
                      [](double t1, double t2) { return std::sin(t1) * std::sin(t2); });
  if (alpha == 2)
    return make_field(g, BoundaryPolicy::robin, 1.0 / std::tan(g->theta),
                      [](double t1, double t2) { return std::sin(t1) * std::cos(t2); });
  return make_field(g, BoundaryPolicy::even_reflection_only, 0.0,
                    [ct](double t1, double) { return std::cos(t1) - ct; });
}

/// Ghost multiplier of the midpoint Robin rule:
/// F_ghost = F_boundary * (1 + b d1/2) / (1 - b d1/2).
inline double robin_ghost_factor(const ScalarField& F) {
  const double b = 0.5 * F.grid->d1 * F.robin_coef;
  if (!(b < 1.0)) throw ArgumentError("robin ghost factor undefined; refine the grid");
  return (1.0 + b) / (1.0 - b);
}

/// Field value with ghost rows resolved; i may range over [-1, N1].
inline double sample(const ScalarField& F, int i, int j) {
  const CapGrid& g = *F.grid;
  const int jw = g.wrap(j);
  if (i >= 0 && i < g.N1) return F.v[g.index(i, jw)];
  if (i == -1) {
    if (F.policy == BoundaryPolicy::none)
      throw MissingBoundaryPolicyError("field has no ghost rule at the pole");
    return F.v[g.index(0, g.across_pole(jw))];
  }
  if (i == g.N1) {
    switch (F.policy) {
      case BoundaryPolicy::robin:
        return robin_ghost_factor(F) * F.v[g.index(g.N1 - 1, jw)];
      case BoundaryPolicy::even_reflection_only:
        // Cubic extrapolation through the last four rows; keeps second-order
        // Hessians for smooth fields that satisfy no boundary condition.
        return 4.0 * F.v[g.index(g.N1 - 1, jw)] - 6.0 * F.v[g.index(g.N1 - 2, jw)] +
               4.0 * F.v[g.index(g.N1 - 3, jw)] - F.v[g.index(g.N1 - 4, jw)];
      case BoundaryPolicy::none:
        throw MissingBoundaryPolicyError("field has no ghost rule at the boundary");
    }
  }
  throw ArgumentError("sample: latitude index out of range");
}

/// Capillary reflection xi -> xi-hat: longitude shift by pi, a column
/// permutation on the grid (N2 is even by construction).
inline ScalarField reflect(const ScalarField& F) {
  ScalarField R = F;
  const CapGrid& g = *F.grid;
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) R.v[g.index(i, j)] = F.v[g.index(i, g.across_pole(j))];
  return R;
}

inline double evenness_defect(const ScalarField& F) {
  return (F.v - reflect(F).v).cwiseAbs().maxCoeff();
}

inline bool is_capillary_even(const ScalarField& F, double tol) {
  return evenness_defect(F) <= tol;
}

/// Midpoint-rule integral over the cap with the area weight sin^{n-1}(theta_1).
inline double integrate(const ScalarField& F) {
  const CapGrid& g = *F.grid;
  double total = 0.0;
  for (int i = 0; i < g.N1; ++i) {
    double row = 0.0;
    for (int j = 0; j < g.N2; ++j) row += F.v[g.index(i, j)];
    total += row * g.w_row[i];
  }
  return total;
}

struct FrameVectorField {
  GridPtr grid;
  Eigen::VectorXd c1, c2;  // components in the orthonormal frame
  double max_norm() const { return (c1.array().square() + c2.array().square()).sqrt().maxCoeff(); }
};

struct FrameMatrixField {
  GridPtr grid;
  Eigen::VectorXd m11, m12, m22;

  Eigen::Matrix2d at(int i, int j) const {
    const int p = grid->index(i, j);
    Eigen::Matrix2d M;
    M << m11[p], m12[p], m12[p], m22[p];
    return M;
  }
  double min_eig(int i, int j) const {
    const int p = grid->index(i, j);
    const double mean = 0.5 * (m11[p] + m22[p]);
    const double rad = std::hypot(0.5 * (m11[p] - m22[p]), m12[p]);
    return mean - rad;
  }
  double max_eig(int i, int j) const {
    const int p = grid->index(i, j);
    const double mean = 0.5 * (m11[p] + m22[p]);
    const double rad = std::hypot(0.5 * (m11[p] - m22[p]), m12[p]);
    return mean + rad;
  }
  double min_eigenvalue() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid->N1; ++i)
      for (int j = 0; j < grid->N2; ++j) m = std::min(m, min_eig(i, j));
    return m;
  }
  double max_eigenvalue() const {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid->N1; ++i)
      for (int j = 0; j < grid->N2; ++j) m = std::max(m, max_eig(i, j));
    return m;
  }
};

namespace detail {
struct NodeDerivs {
  double d1, d2, d11, d22, d12;
};

inline NodeDerivs node_derivs(const ScalarField& F, int i, int j) {
  const CapGrid& g = *F.grid;
  const double f0 = F.v[g.index(i, j)];
  const double fn = sample(F, i + 1, j), fs = sample(F, i - 1, j);
  const double fe = sample(F, i, j + 1), fw = sample(F, i, j - 1);
  const double fne = sample(F, i + 1, j + 1), fnw = sample(F, i + 1, j - 1);
  const double fse = sample(F, i - 1, j + 1), fsw = sample(F, i - 1, j - 1);
  NodeDerivs d;
  d.d1 = (fn - fs) / (2.0 * g.d1);
  d.d2 = (fe - fw) / (2.0 * g.d2);
  d.d11 = (fn - 2.0 * f0 + fs) / (g.d1 * g.d1);
  d.d22 = (fe - 2.0 * f0 + fw) / (g.d2 * g.d2);
  d.d12 = (fne - fnw - fse + fsw) / (4.0 * g.d1 * g.d2);
  return d;
}
}  // namespace detail

inline FrameVectorField covariant_gradient(const ScalarField& F) {
  const CapGrid& g = *F.grid;
  FrameVectorField G;
  G.grid = F.grid;
  G.c1.resize(g.N1 * g.N2);
  G.c2.resize(g.N1 * g.N2);
  for (int i = 0; i < g.N1; ++i) {
    for (int j = 0; j < g.N2; ++j) {
      const auto d = detail::node_derivs(F, i, j);
      G.c1[g.index(i, j)] = d.d1;
      G.c2[g.index(i, j)] = d.d2 / g.s1[i];
    }
  }
  return G;
}

/// Covariant Hessian in the orthonormal frame:
///   H11 = F_11,  H12 = (F_12 - cot(t1) F_2)/sin(t1),
///   H22 = F_22/sin^2(t1) + cot(t1) F_1.
inline FrameMatrixField covariant_hessian(const ScalarField& F) {
  const CapGrid& g = *F.grid;
  FrameMatrixField H;
  H.grid = F.grid;
  H.m11.resize(g.N1 * g.N2);
  H.m12.resize(g.N1 * g.N2);
  H.m22.resize(g.N1 * g.N2);
  for (int i = 0; i < g.N1; ++i) {
    const double s = g.s1[i], ct = g.ct1[i];
    for (int j = 0; j < g.N2; ++j) {
      const auto d = detail::node_derivs(F, i, j);
      const int p = g.index(i, j);
      H.m11[p] = d.d11;
      H.m12[p] = (d.d12 - ct * d.d2) / s;
      H.m22[p] = d.d22 / (s * s) + ct * d.d1;
    }
  }
  return H;
}

/// Curvature operator A(h) = Hess h + h * sigma, whose eigenvalues are the
/// principal curvature radii of the surface with support function h.
inline FrameMatrixField radii_operator(const ScalarField& h) {
  FrameMatrixField A = covariant_hessian(h);
  A.m11 += h.v;
  A.m22 += h.v;
  return A;
}

struct BoundaryTrace {
  Eigen::VectorXd value;  // field extrapolated to theta_1 = theta, per column
  Eigen::VectorXd deriv;  // d/dtheta_1 at theta_1 = theta, per column
};

/// One-sided quadratic extrapolation to the boundary circle from the last
/// three rows. Independent of the ghost construction by design, so it can
/// audit the boundary condition the ghosts encode.
inline BoundaryTrace boundary_trace(const ScalarField& F) {
  const CapGrid& g = *F.grid;
  if (g.N1 < 3) throw ArgumentError("boundary_trace: needs at least three rows");
  BoundaryTrace T;
  T.value.resize(g.N2);
  T.deriv.resize(g.N2);
  for (int j = 0; j < g.N2; ++j) {
    const double y1 = F.at(g.N1 - 1, j);  // theta - d1/2
    const double y2 = F.at(g.N1 - 2, j);  // theta - 3 d1/2
    const double y3 = F.at(g.N1 - 3, j);  // theta - 5 d1/2
    T.value[j] = (15.0 * y1 - 10.0 * y2 + 3.0 * y3) / 8.0;
    T.deriv[j] = (2.0 * y1 - 3.0 * y2 + y3) / g.d1;
  }
  return T;
}

/// Robin defect grad_mu h - cot(theta) h on the boundary circle, one value per
/// longitude column.
inline Eigen::VectorXd robin_residual(const ScalarField& h) {
  const CapGrid& g = *h.grid;
  const BoundaryTrace T = boundary_trace(h);
  return T.deriv - (1.0 / std::tan(g.theta)) * T.value;
}

/// Consistency of the two formulations of the curvature operator: assembling
/// A(h) directly must agree with the form written in u = h/l,
///   l Hess u + cos(theta)(grad u (x) e_T + e_T (x) grad u) + u sigma,
/// where e_T, the tangential part of the capillary direction, has frame
/// components (sin theta_1, 0). Returns the max entrywise discrepancy.
inline double u_transform_check(const ScalarField& h) {
  const CapGrid& g = *h.grid;
  const ScalarField l = ell_field(h.grid);
  ScalarField u = h;
  u.policy = BoundaryPolicy::robin;
  u.robin_coef = 0.0;  // h/l satisfies the Neumann condition
  u.v = h.v.cwiseQuotient(l.v);

  const FrameMatrixField A = radii_operator(h);
  const FrameMatrixField Hu = covariant_hessian(u);
  const FrameVectorField Gu = covariant_gradient(u);
  const double cth = std::cos(g.theta);

  double worst = 0.0;
  for (int i = 0; i < g.N1; ++i) {
    const double s = g.s1[i];
    for (int j = 0; j < g.N2; ++j) {
      const int p = g.index(i, j);
      const double r11 = l.v[p] * Hu.m11[p] + 2.0 * cth * Gu.c1[p] * s + u.v[p];
      const double r12 = l.v[p] * Hu.m12[p] + cth * Gu.c2[p] * s;
      const double r22 = l.v[p] * Hu.m22[p] + u.v[p];
      worst = std::max({worst, std::abs(A.m11[p] - r11), std::abs(A.m12[p] - r12),
                        std::abs(A.m22[p] - r22)});
    }
  }
  return worst;
}

}  // namespace capcurv
