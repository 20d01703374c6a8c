#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "capcurv/capdomain.hpp"
#include "capcurv/errors.hpp"
#include "capcurv/symfun.hpp"

// Surface recovery from the support function: X = grad h + h nu on the Gauss
// sphere cap, plus the geometric audits that make the reconstruction
// trustworthy: planarity of the contact ring, the contact angle measured from
// the triangulated surface, an independently assembled shape operator, and the
// capillary/classical in- and circumradii.

namespace capcurv {

inline Eigen::Vector3d cap_normal(double t1, double t2) {
  return {std::sin(t1) * std::sin(t2), std::sin(t1) * std::cos(t2), std::cos(t1)};
}

inline Eigen::Vector3d cap_frame1(double t1, double t2) {
  return {std::cos(t1) * std::sin(t2), std::cos(t1) * std::cos(t2), -std::sin(t1)};
}

inline Eigen::Vector3d cap_frame2(double /*t1*/, double t2) {
  return {std::cos(t2), -std::sin(t2), 0.0};
}

/// Vertex sheet of the reconstructed surface: rows 0..N1-1 are the grid
/// latitudes, row N1 is the contact ring at theta_1 = theta obtained from the
/// one-sided boundary trace. The Gauss image of vertex (i, j) is the grid
/// normal, which is what makes all curvature audits frame-exact.
struct Embedding {
  GridPtr grid;
  Eigen::Matrix<double, Eigen::Dynamic, 3> X;

  int vindex(int i, int j) const { return i * grid->N2 + j; }
  Eigen::Vector3d vertex(int i, int j) const { return X.row(vindex(i, j)); }
  int vertex_rows() const { return (grid->N1 + 1) * grid->N2; }

  Eigen::Vector3d normal(int i, int j) const {
    const double t1 = (i == grid->N1) ? grid->theta : grid->th1[i];
    return cap_normal(t1, grid->th2[j]);
  }
};

inline Embedding embed(const ScalarField& h) {
  const CapGrid& g = *h.grid;
  Embedding E;
  E.grid = h.grid;
  E.X.resize((g.N1 + 1) * g.N2, 3);
  const FrameVectorField G = covariant_gradient(h);
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const int p = g.index(i, j);
      const Eigen::Vector3d x = h.v[p] * cap_normal(g.th1[i], g.th2[j]) +
                                G.c1[p] * cap_frame1(g.th1[i], g.th2[j]) +
                                G.c2[p] * cap_frame2(g.th1[i], g.th2[j]);
      E.X.row(E.vindex(i, j)) = x;
    }
  // contact ring: latitude value and derivative from the boundary trace, the
  // longitude derivative from central differences along the ring itself
  const BoundaryTrace T = boundary_trace(h);
  const double th = g.theta, sth = std::sin(th);
  for (int j = 0; j < g.N2; ++j) {
    const int jp = g.wrap(j + 1), jm = g.wrap(j - 1);
    const double d2 = (T.value[jp] - T.value[jm]) / (2.0 * g.d2);
    const Eigen::Vector3d x = T.value[j] * cap_normal(th, g.th2[j]) +
                              T.deriv[j] * cap_frame1(th, g.th2[j]) +
                              (d2 / sth) * cap_frame2(th, g.th2[j]);
    E.X.row(E.vindex(g.N1, j)) = x;
  }
  return E;
}

/// Height of the contact ring above the support plane. Algebraically equal to
/// -sin(theta) times the Robin defect, so it vanishes exactly when the
/// boundary condition holds and measures its violation otherwise.
inline Eigen::VectorXd ring_height(const Embedding& E) {
  const CapGrid& g = *E.grid;
  Eigen::VectorXd z(g.N2);
  for (int j = 0; j < g.N2; ++j) z[j] = E.X(E.vindex(g.N1, j), 2);
  return z;
}

/// Contact angle at each ring vertex, measured purely from the triangulated
/// sheet: outward mesh normal from the ring tangent and the one-sided
/// latitude tangent, then the angle against the capillary direction -E3.
inline Eigen::VectorXd contact_angles(const Embedding& E) {
  const CapGrid& g = *E.grid;
  Eigen::VectorXd a(g.N2);
  for (int j = 0; j < g.N2; ++j) {
    const Eigen::Vector3d xr = E.vertex(g.N1, j);
    const Eigen::Vector3d tb =
        (E.vertex(g.N1, g.wrap(j + 1)) - E.vertex(g.N1, g.wrap(j - 1))) / (2.0 * g.d2);
    // second-order one-sided derivative in theta_1 on the half-step ladder:
    // ring at 0, last rows at -d/2 and -3d/2
    const Eigen::Vector3d tout =
        (8.0 * xr - 9.0 * E.vertex(g.N1 - 1, j) + E.vertex(g.N1 - 2, j)) / (3.0 * g.d1);
    Eigen::Vector3d n = tb.cross(tout);
    const double len = n.norm();
    if (!(len > 0.0)) throw ArgumentError("contact_angles: degenerate ring geometry");
    n /= len;
    a[j] = M_PI - std::acos(std::clamp(-n.z(), -1.0, 1.0));
  }
  return a;
}

struct CurvatureConsistency {
  double quotient_defect = 0.0;  // |sigma_{n-k}/sigma_n (eigenvalues) - f|, all nodes
  double shape_rel_err = 0.0;    // mesh shape operator vs A(h), interior rows
  double shape_asym = 0.0;       // asymmetry of the mesh shape operator
};

/// Cross-examine the curvatures three ways: the prescribed function f, the
/// eigenvalues of the assembled operator A(h), and a shape operator recomputed
/// from the embedded vertex sheet with analytic Gauss-map derivatives.
inline CurvatureConsistency curvature_consistency(const ScalarField& h, int k,
                                                  const ScalarField& f) {
  const CapGrid& g = *h.grid;
  if (f.v.size() != h.v.size()) throw GridMismatchError("curvature data does not match the grid");
  CurvatureConsistency out;
  const FrameMatrixField A = radii_operator(h);
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      const double l1 = A.min_eig(i, j), l2 = A.max_eig(i, j);
      if (!(l1 > 0.0))
        throw NotAdmissibleError("curvature operator left the positive cone", i, j, l1);
      const double sn = l1 * l2;
      const double snk = (k == 1) ? l1 + l2 : 1.0;  // n = 2: sigma_1 or sigma_0
      out.quotient_defect =
          std::max(out.quotient_defect, std::abs(snk / sn - f.v[g.index(i, j)]));
    }

  const Embedding E = embed(h);
  for (int i = 1; i + 1 < g.N1; ++i) {
    const double s = g.s1[i];
    for (int j = 0; j < g.N2; ++j) {
      const Eigen::Vector3d xt1 =
          (E.vertex(i + 1, j) - E.vertex(i - 1, j)) / (2.0 * g.d1);
      const Eigen::Vector3d xt2 =
          (E.vertex(i, g.wrap(j + 1)) - E.vertex(i, g.wrap(j - 1))) / (2.0 * g.d2);
      const Eigen::Vector3d e1 = cap_frame1(g.th1[i], g.th2[j]);
      const Eigen::Vector3d e2 = cap_frame2(g.th1[i], g.th2[j]);
      Eigen::Matrix2d B;
      B << e1.dot(xt1), e1.dot(xt2) / s, e2.dot(xt1), e2.dot(xt2) / s;
      out.shape_asym = std::max(out.shape_asym, std::abs(B(0, 1) - B(1, 0)));
      Eigen::Matrix2d Bs = 0.5 * (B + B.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Bs);
      const double a1 = A.min_eig(i, j), a2 = A.max_eig(i, j);
      const double r1 = std::abs(es.eigenvalues()[0] - a1) / std::max(1.0, std::abs(a1));
      const double r2 = std::abs(es.eigenvalues()[1] - a2) / std::max(1.0, std::abs(a2));
      out.shape_rel_err = std::max({out.shape_rel_err, r1, r2});
    }
  }
  return out;
}

namespace detail {

/// Golden-section search for the maximum of a unimodal function on [lo, hi].
template <typename Fn>
double golden_max(Fn&& fn, double lo, double hi, double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = fn(x1), f2 = fn(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = fn(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = fn(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

struct CapillaryRadii {
  double inner = 0.0, outer = 0.0;
  Eigen::Vector2d z_inner = Eigen::Vector2d::Zero();
  Eigen::Vector2d z_outer = Eigen::Vector2d::Zero();
};

/// Largest cap inside and smallest cap outside, over horizontal translations:
///   inner = max_z min_nodes (h - <z, xi>)/l,  outer = min_z max_nodes ...,
/// using that a translated cap of radius r has support function <z, xi> + r l.
/// Coordinate-descent golden-section search; the box is enlarged and retried
/// if an optimum presses against it.
inline CapillaryRadii capillary_radii(const ScalarField& h, double tol = 1e-8) {
  const CapGrid& g = *h.grid;
  const ScalarField l = ell_field(h.grid);
  const BoundaryTrace Th = boundary_trace(h);

  // sample points (xi_1, xi_2, l) across the cap plus the contact ring
  std::vector<Eigen::Vector3d> pts;  // (xi1, xi2, l)
  std::vector<double> hv;
  pts.reserve(static_cast<std::size_t>(g.N1 + 1) * g.N2);
  for (int i = 0; i < g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) {
      pts.emplace_back(g.s1[i] * g.s2[j], g.s1[i] * g.c2[j], l.v[g.index(i, j)]);
      hv.push_back(h.v[g.index(i, j)]);
    }
  const double sth = std::sin(g.theta), lth = sth * sth;
  for (int j = 0; j < g.N2; ++j) {
    pts.emplace_back(sth * g.s2[j], sth * g.c2[j], lth);
    hv.push_back(Th.value[j]);
  }

  auto ratio_min = [&](const Eigen::Vector2d& z) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < pts.size(); ++p)
      m = std::min(m, (hv[p] - z.x() * pts[p].x() - z.y() * pts[p].y()) / pts[p].z());
    return m;
  };
  auto ratio_max = [&](const Eigen::Vector2d& z) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < pts.size(); ++p)
      m = std::max(m, (hv[p] - z.x() * pts[p].x() - z.y() * pts[p].y()) / pts[p].z());
    return m;
  };

  const double h_scale = h.v.cwiseAbs().maxCoeff();
  CapillaryRadii out;
  for (int side = 0; side < 2; ++side) {
    const bool inner = (side == 0);
    double box = 2.0 * h_scale;
    for (int attempt = 0;; ++attempt) {
      Eigen::Vector2d z = Eigen::Vector2d::Zero();
      for (int sweep = 0; sweep < 60; ++sweep) {
        Eigen::Vector2d prev = z;
        for (int c = 0; c < 2; ++c) {
          auto line = [&](double t) {
            Eigen::Vector2d zz = z;
            zz[c] = t;
            return inner ? ratio_min(zz) : -ratio_max(zz);
          };
          z[c] = detail::golden_max(line, -box, box, tol);
        }
        if ((z - prev).norm() < tol) break;
      }
      if (z.cwiseAbs().maxCoeff() < box * 0.9) {
        if (inner) {
          out.inner = ratio_min(z);
          out.z_inner = z;
        } else {
          out.outer = ratio_max(z);
          out.z_outer = z;
        }
        break;
      }
      box *= 2.0;
      if (attempt >= 3)
        throw OptimizerError("cap radius search kept running into the box");
    }
  }
  return out;
}

struct ChouWangBound {
  double lhs = 0.0, rhs = 0.0;
  bool holds = false;
};

/// Lower bound on the largest curvature radius in terms of the two capillary
/// radii: max lambda(A) >= (2n^2 - 1)^{-3/2} (1 - cos)^2 outer^2 / (sin inner).
inline ChouWangBound chou_wang_check(const ScalarField& h, const CapillaryRadii& r,
                                     double slack = 0.01) {
  const CapGrid& g = *h.grid;
  ChouWangBound b;
  b.lhs = radii_operator(h).max_eigenvalue();
  const double c = std::pow(1.0 / (2.0 * g.n * g.n - 1.0), 1.5);
  b.rhs = c * std::pow(1.0 - std::cos(g.theta), 2) * r.outer * r.outer /
          (std::sin(g.theta) * r.inner);
  b.holds = b.lhs * (1.0 + slack) >= b.rhs;
  return b;
}

namespace detail {

struct Ball {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  double r = -1.0;
  bool contains(const Eigen::Vector3d& p, double eps) const {
    return r >= 0.0 && (p - c).norm() <= r + eps;
  }
};

inline Ball ball_of_2(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  Ball B;
  B.c = 0.5 * (a + b);
  B.r = 0.5 * (a - b).norm();
  return B;
}

inline Ball ball_of_3(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                      const Eigen::Vector3d& c) {
  const Eigen::Vector3d u = b - a, v = c - a;
  Eigen::Matrix2d M;
  M << u.dot(u), u.dot(v), u.dot(v), v.dot(v);
  Eigen::Vector2d rhs(0.5 * u.dot(u), 0.5 * v.dot(v));
  if (std::abs(M.determinant()) < 1e-14 * std::max(1.0, M.norm())) {
    // nearly collinear: take the widest pair
    Ball best = ball_of_2(a, b);
    for (const Ball& alt : {ball_of_2(a, c), ball_of_2(b, c)})
      if (alt.r > best.r) best = alt;
    return best;
  }
  const Eigen::Vector2d t = M.inverse() * rhs;
  Ball B;
  B.c = a + t.x() * u + t.y() * v;
  B.r = (B.c - a).norm();
  return B;
}

inline Ball ball_of_4(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                      const Eigen::Vector3d& c, const Eigen::Vector3d& d) {
  Eigen::Matrix3d M;
  M.row(0) = (b - a).transpose();
  M.row(1) = (c - a).transpose();
  M.row(2) = (d - a).transpose();
  Eigen::Vector3d rhs(0.5 * (b.squaredNorm() - a.squaredNorm()),
                      0.5 * (c.squaredNorm() - a.squaredNorm()),
                      0.5 * (d.squaredNorm() - a.squaredNorm()));
  Eigen::FullPivLU<Eigen::Matrix3d> lu(M);
  if (!lu.isInvertible()) {
    Ball best;
    for (const Ball& alt : {ball_of_3(a, b, c), ball_of_3(a, b, d), ball_of_3(a, c, d),
                            ball_of_3(b, c, d)})
      if (alt.r > best.r) best = alt;
    return best;
  }
  Ball B;
  B.c = lu.solve(rhs);
  B.r = (B.c - a).norm();
  return B;
}

/// Welzl-style minimum enclosing ball with explicit support levels; points are
/// pre-shuffled deterministically by the caller.
inline Ball meb_level3(const std::vector<Eigen::Vector3d>& P, std::size_t limit,
                       const Eigen::Vector3d& q1, const Eigen::Vector3d& q2,
                       const Eigen::Vector3d& q3) {
  Ball B = ball_of_3(q1, q2, q3);
  for (std::size_t i = 0; i < limit; ++i)
    if (!B.contains(P[i], 1e-12)) B = ball_of_4(P[i], q1, q2, q3);
  return B;
}

inline Ball meb_level2(const std::vector<Eigen::Vector3d>& P, std::size_t limit,
                       const Eigen::Vector3d& q1, const Eigen::Vector3d& q2) {
  Ball B = ball_of_2(q1, q2);
  for (std::size_t i = 0; i < limit; ++i)
    if (!B.contains(P[i], 1e-12)) B = meb_level3(P, i, P[i], q1, q2);
  return B;
}

inline Ball meb_level1(const std::vector<Eigen::Vector3d>& P, std::size_t limit,
                       const Eigen::Vector3d& q1) {
  Ball B;
  B.c = q1;
  B.r = 0.0;
  for (std::size_t i = 0; i < limit; ++i)
    if (!B.contains(P[i], 1e-12)) B = meb_level2(P, i, P[i], q1);
  return B;
}

}  // namespace detail

/// Minimum enclosing ball of a point cloud (deterministic shuffle).
inline detail::Ball min_enclosing_ball(std::vector<Eigen::Vector3d> P) {
  if (P.empty()) throw ArgumentError("min_enclosing_ball: empty point set");
  std::mt19937_64 gen(12345);
  std::shuffle(P.begin(), P.end(), gen);
  detail::Ball B;
  B.c = P[0];
  B.r = 0.0;
  for (std::size_t i = 1; i < P.size(); ++i)
    if (!B.contains(P[i], 1e-12)) B = detail::meb_level1(P, i, P[i]);
  return B;
}

struct ClassicalRadii {
  double inradius = 0.0, circumradius = 0.0;
  Eigen::Vector3d incenter = Eigen::Vector3d::Zero();
  Eigen::Vector3d circumcenter = Eigen::Vector3d::Zero();
};

/// Classical in/circumradius of the convex body enclosed by the surface and
/// the support plane. The circumradius comes from the minimum enclosing ball
/// of the vertex sheet; the inradius from the sampled support program
/// max_x min_w (s(w) - <x, w>) over outward directions w, with the capillary
/// direction included so the base plane constrains the ball.
inline ClassicalRadii classical_radii(const Embedding& E) {
  const CapGrid& g = *E.grid;
  std::vector<Eigen::Vector3d> verts;
  verts.reserve(E.vertex_rows());
  for (int i = 0; i <= g.N1; ++i)
    for (int j = 0; j < g.N2; ++j) verts.push_back(E.vertex(i, j));

  ClassicalRadii out;
  const detail::Ball mb = min_enclosing_ball(verts);
  out.circumradius = mb.r;
  out.circumcenter = mb.c;

  // direction set: subsampled grid normals, ring base directions, the axis
  std::vector<Eigen::Vector3d> dirs;
  const int si = std::max(1, g.N1 / 32), sj = std::max(1, g.N2 / 64);
  for (int i = 0; i < g.N1; i += si)
    for (int j = 0; j < g.N2; j += sj) dirs.push_back(cap_normal(g.th1[i], g.th2[j]));
  for (int j = 0; j < g.N2; ++j) dirs.push_back({g.s2[j], g.c2[j], 0.0});
  dirs.push_back({0.0, 0.0, -1.0});
  dirs.push_back({0.0, 0.0, 1.0});

  std::vector<double> sup(dirs.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t d = 0; d < dirs.size(); ++d)
    for (const auto& v : verts) sup[d] = std::max(sup[d], dirs[d].dot(v));

  auto depth = [&](const Eigen::Vector3d& x) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < dirs.size(); ++d) m = std::min(m, sup[d] - dirs[d].dot(x));
    return m;
  };

  // Chebyshev center by smoothing: the exact objective min_d (s_d - <x, w_d>)
  // is piecewise linear, where coordinate searches jam on plateau kinks, so
  // anneal a log-sum-exp softmin and chase it with damped Newton steps. The
  // reported inradius is the exact depth at the final center, hence always a
  // certified inscribed radius.
  const double scale = std::max(1e-12, mb.r);
  Eigen::Vector3d x = Eigen::Vector3d(0, 0, 0.25 * scale);
  for (double tau = 0.25 * scale; tau > 1e-6 * scale; tau *= 0.2) {
    for (int step = 0; step < 60; ++step) {
      Eigen::VectorXd ex(dirs.size());
      for (std::size_t d = 0; d < dirs.size(); ++d) ex[d] = (dirs[d].dot(x) - sup[d]) / tau;
      const double emax = ex.maxCoeff();
      Eigen::VectorXd p = (ex.array() - emax).exp();
      p /= p.sum();
      Eigen::Vector3d grad = Eigen::Vector3d::Zero();
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (std::size_t d = 0; d < dirs.size(); ++d) {
        grad -= p[d] * dirs[d];  // ascent direction of the softmin
        cov += p[d] * dirs[d] * dirs[d].transpose();
      }
      Eigen::Matrix3d H = (cov - (-grad) * (-grad).transpose()) / tau;
      H += 1e-10 * Eigen::Matrix3d::Identity();
      const Eigen::Vector3d dx = H.ldlt().solve(grad);
      if (!dx.allFinite()) break;
      // backtrack on the exact objective; softmin and depth share maximizers
      // up to O(tau log m)
      double s = 1.0;
      const double f0 = depth(x);
      bool moved = false;
      for (int bt = 0; bt < 30; ++bt, s *= 0.5) {
        if (depth(x + s * dx) > f0) {
          x += s * dx;
          moved = true;
          break;
        }
      }
      if (!moved || grad.norm() < 1e-14) break;
    }
  }
  out.inradius = depth(x);
  out.incenter = x;
  return out;
}

struct RadiiRelations {
  bool inner_ok = false, outer_ok = false;
  double inner_margin = 0.0, outer_margin = 0.0;
};

/// Bridges between the capillary and classical radii:
///   inner(theta) >= inradius / sin(theta),
///   outer(theta) <= circumradius / (1 - cos(theta)),
/// each audited with a small slack for discretization.
inline RadiiRelations radii_relations(const CapillaryRadii& cap, const ClassicalRadii& cls,
                                      double theta, double slack = 0.02) {
  RadiiRelations rr;
  rr.inner_margin = cap.inner * (1.0 + slack) - cls.inradius / std::sin(theta);
  rr.outer_margin = cls.circumradius / (1.0 - std::cos(theta)) * (1.0 + slack) - cap.outer;
  rr.inner_ok = rr.inner_margin >= 0.0;
  rr.outer_ok = rr.outer_margin >= 0.0;
  return rr;
}

}  // namespace capcurv
