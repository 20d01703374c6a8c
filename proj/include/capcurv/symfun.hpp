#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "capcurv/errors.hpp"

// Elementary symmetric functions sigma_k, their normalized means H_k, the
// Garding cones Gamma_k, and the Hessian quotient sigma_n/sigma_{n-k} with its
// matrix derivative. All evaluation goes through the characteristic-polynomial
// recurrence (never subset enumeration), and matrix derivatives use the matrix
// polynomial form, which stays well defined at repeated eigenvalues.

namespace capcurv {

/// Binomial coefficient as a double (exact for every n that fits a matrix here).
[[nodiscard]] inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / i;
  return r;
}

namespace detail {

inline void require_finite(const Eigen::VectorXd& lambda) {
  if (!lambda.allFinite()) throw ArgumentError("eigenvalue vector has non-finite entries");
}

/// e_0..e_m of lambda via the triangular recurrence e_j += lambda_i * e_{j-1}.
/// This is the coefficient recurrence of prod_i (1 + lambda_i x) truncated at
/// degree m; cost O(n*m), no 2^n blowup.
[[nodiscard]] inline Eigen::VectorXd elementary_up_to(const Eigen::VectorXd& lambda, int m) {
  const int n = static_cast<int>(lambda.size());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m + 1);
  e(0) = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::min(i + 1, m); j >= 1; --j) e(j) += lambda(i) * e(j - 1);
  return e;
}

inline void require_symmetric(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols() || A.rows() < 1) throw ArgumentError("matrix must be square");
  const double scale = 1.0 + A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ArgumentError("matrix must be symmetric");
}

[[nodiscard]] inline Eigen::VectorXd eigenvalues_sym(const Eigen::MatrixXd& A) {
  require_symmetric(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ArgumentError("eigenvalue computation failed");
  return es.eigenvalues();
}

/// Threshold below which sigma_{n-k} counts as vanished, scaled to the data.
[[nodiscard]] inline double degenerate_threshold(const Eigen::VectorXd& lambda, int m) {
  const int n = static_cast<int>(lambda.size());
  const double a = std::max(1e-30, lambda.cwiseAbs().maxCoeff());
  return 1e-13 * binom(n, m) * std::pow(a, m);
}

}  // namespace detail

/// k-th elementary symmetric function of lambda; sigma_0 = 1, sigma_k = 0 for k > n.
[[nodiscard]] inline double sigma_k(const Eigen::VectorXd& lambda, int k) {
  detail::require_finite(lambda);
  if (k < 0) throw ArgumentError("sigma_k: negative order");
  const int n = static_cast<int>(lambda.size());
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  return detail::elementary_up_to(lambda, k)(k);
}

/// Normalized k-th mean H_k = sigma_k / binom(n,k); H_k(c,...,c) = c^k.
[[nodiscard]] inline double h_k(const Eigen::VectorXd& lambda, int k) {
  const int n = static_cast<int>(lambda.size());
  if (k < 0 || k > n) throw ArgumentError("h_k: order outside 0..n");
  return sigma_k(lambda, k) / binom(n, k);
}

/// sigma_k of lambda with entry i removed, sigma_k(lambda | i).
/// Evaluated by re-running the recurrence with the entry zeroed: a zero entry
/// contributes nothing to any product, so this equals the deleted function
/// without the cancellation risk of dividing the full polynomial back out.
[[nodiscard]] inline double sigma_k_deleted(const Eigen::VectorXd& lambda, int k, int i) {
  const int n = static_cast<int>(lambda.size());
  if (i < 0 || i >= n) throw ArgumentError("sigma_k_deleted: index out of range");
  if (k < 0) throw ArgumentError("sigma_k_deleted: negative order");
  if (k > n - 1) return 0.0;
  Eigen::VectorXd mu = lambda;
  mu(i) = 0.0;
  return sigma_k(mu, k);
}

/// Strict Garding cone test: sigma_i(lambda) > 0 for i = 1..k.
[[nodiscard]] inline bool in_gamma_k(const Eigen::VectorXd& lambda, int k) {
  detail::require_finite(lambda);
  const int n = static_cast<int>(lambda.size());
  if (k < 1 || k > n) throw ArgumentError("in_gamma_k: order outside 1..n");
  const Eigen::VectorXd e = detail::elementary_up_to(lambda, k);
  for (int i = 1; i <= k; ++i)
    if (!(e(i) > 0.0)) return false;
  return true;
}

/// Quotient sigma_n(A) / sigma_{n-k}(A) for symmetric A, 1 <= k <= n.
[[nodiscard]] inline double quotient_value(const Eigen::MatrixXd& A, int k) {
  const Eigen::VectorXd lambda = detail::eigenvalues_sym(A);
  const int n = static_cast<int>(lambda.size());
  if (k < 1 || k > n) throw ArgumentError("quotient_value: k outside 1..n");
  const Eigen::VectorXd e = detail::elementary_up_to(lambda, n);
  const double den = e(n - k);
  if (std::abs(den) <= detail::degenerate_threshold(lambda, n - k))
    throw DegenerateQuotientError("sigma_{n-k}(A) vanishes; quotient undefined");
  return e(n) / den;
}

/// Derivative matrix of sigma_m at A in the matrix polynomial form
///   T_{m-1}(A) = sum_{j=0}^{m-1} (-1)^j sigma_{m-1-j}(A) A^j,
/// the (m-1)-th Newton transform. In the eigenframe its entries are the
/// deleted functions sigma_{m-1}(lambda | i); unlike the eigenframe formula it
/// needs no eigenvector basis and is continuous across repeated eigenvalues.
/// m = n gives the adjugate. T_{-1} = 0 covers sigma_0 = const.
[[nodiscard]] inline Eigen::MatrixXd sigma_derivative(const Eigen::MatrixXd& A, int m) {
  detail::require_symmetric(A);
  const int n = static_cast<int>(A.rows());
  if (m < 0 || m > n) throw ArgumentError("sigma_derivative: order outside 0..n");
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  if (m == 0) return T;
  const Eigen::VectorXd e =
      detail::elementary_up_to(detail::eigenvalues_sym(A), m - 1);
  Eigen::MatrixXd Apow = Eigen::MatrixXd::Identity(n, n);
  double sign = 1.0;
  for (int j = 0; j <= m - 1; ++j) {
    T += sign * e(m - 1 - j) * Apow;
    if (j < m - 1) Apow = (Apow * A).eval();
    sign = -sign;
  }
  return ((T + T.transpose()) / 2.0).eval();
}

/// Gradient of the quotient sigma_n/sigma_{n-k} with respect to A:
///   [sigma_{n-k} dsigma_n - sigma_n dsigma_{n-k}] / sigma_{n-k}^2.
[[nodiscard]] inline Eigen::MatrixXd quotient_gradient(const Eigen::MatrixXd& A, int k) {
  const Eigen::VectorXd lambda = detail::eigenvalues_sym(A);
  const int n = static_cast<int>(lambda.size());
  if (k < 1 || k > n) throw ArgumentError("quotient_gradient: k outside 1..n");
  const Eigen::VectorXd e = detail::elementary_up_to(lambda, n);
  const double den = e(n - k);
  if (std::abs(den) <= detail::degenerate_threshold(lambda, n - k))
    throw DegenerateQuotientError("sigma_{n-k}(A) vanishes; gradient undefined");
  const Eigen::MatrixXd Tn = sigma_derivative(A, n);
  if (k == n) return Tn;  // sigma_0 = 1 in the denominator
  const Eigen::MatrixXd Tm = sigma_derivative(A, n - k);
  return ((den * Tn - e(n) * Tm) / (den * den)).eval();
}

struct MaclaurinWitness {
  bool holds;
  double lhs;
  double rhs;
};

/// Maclaurin chain comparison on Gamma_k:
///   (H_k/H_l)^{1/(k-l)} <= (H_r/H_s)^{1/(r-s)}  for k > l >= 0, r > s >= 0,
/// k >= r, l >= s. Checked with relative slack 1e-10; both sides returned so
/// callers can report the margin.
[[nodiscard]] inline MaclaurinWitness maclaurin_chain_check(const Eigen::VectorXd& lambda,
                                                            int k, int l, int r, int s) {
  const int n = static_cast<int>(lambda.size());
  if (!(k > l && l >= 0 && r > s && s >= 0 && k >= r && l >= s && k <= n))
    throw ArgumentError("maclaurin_chain_check: invalid index pattern");
  if (!in_gamma_k(lambda, k))
    throw ConeMembershipError("maclaurin_chain_check: lambda outside Gamma_k");
  const double lhs = std::pow(h_k(lambda, k) / h_k(lambda, l), 1.0 / (k - l));
  const double rhs = std::pow(h_k(lambda, r) / h_k(lambda, s), 1.0 / (r - s));
  return {lhs <= rhs * (1.0 + 1e-10), lhs, rhs};
}

/// Midpoint concavity probe for F = (sigma_n/sigma_{n-k})^{1/k} on positive
/// definite matrices: F((A+B)/2) >= (F(A)+F(B))/2 up to roundoff slack.
[[nodiscard]] inline bool quotient_concavity_check(const Eigen::MatrixXd& A,
                                                   const Eigen::MatrixXd& B, int k) {
  if (A.rows() != B.rows()) throw ArgumentError("quotient_concavity_check: size mismatch");
  if (detail::eigenvalues_sym(A).minCoeff() <= 0.0 ||
      detail::eigenvalues_sym(B).minCoeff() <= 0.0)
    throw ConeMembershipError("quotient_concavity_check: inputs must be positive definite");
  const auto F = [k](const Eigen::MatrixXd& M) {
    return std::pow(quotient_value(M, k), 1.0 / k);
  };
  const double fa = F(A);
  const double fb = F(B);
  const double fm = F(((A + B) / 2.0).eval());
  return fm >= 0.5 * (fa + fb) - 1e-12 * (1.0 + std::abs(fa) + std::abs(fb));
}

// --- fast path for the 2x2 frame matrices the solver assembles per node ---

struct QuotientGradient2 {
  double value;
  double g11, g12, g22;  // gradient wrt (a11, a12, a22) as a symmetric matrix
};

/// Quotient and gradient for a symmetric 2x2 in closed form, k in {1, 2}.
/// k=1: det/tr with gradient (tr*adj - det*I)/tr^2; k=2: det with gradient adj.
/// Mirrors quotient_value/quotient_gradient exactly (cross-checked in tests);
/// exists so the per-node solver loop does no dynamic allocation.
[[nodiscard]] inline QuotientGradient2 hessian_quotient_2x2(double a11, double a12,
                                                            double a22, int k) {
  const double s1 = a11 + a22;
  const double s2 = a11 * a22 - a12 * a12;
  if (k == 2) return {s2, a22, -a12, a11};
  if (k != 1) throw ArgumentError("hessian_quotient_2x2: k outside 1..2");
  const double scale = std::max({1.0e-30, std::abs(a11), std::abs(a12), std::abs(a22)});
  if (std::abs(s1) <= 2e-13 * scale)
    throw DegenerateQuotientError("trace vanishes; 2x2 quotient undefined");
  const double inv = 1.0 / (s1 * s1);
  return {s2 / s1, (s1 * a22 - s2) * inv, -s1 * a12 * inv, (s1 * a11 - s2) * inv};
}

}  // namespace capcurv
