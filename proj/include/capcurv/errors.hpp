#pragma once

#include <stdexcept>
#include <string>

// Error types shared across the workbench. Everything derives from
// std::runtime_error (or invalid_argument for plain bad arguments) so callers
// can catch coarsely; the distinct types exist because the CLI maps them to
// different exit codes and tests assert on them.

namespace capcurv {

/// Malformed argument: bad index, bad order k, inconsistent sizes, ...
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// sigma_{n-k} vanished within machine tolerance; the quotient is undefined.
struct DegenerateQuotientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Eigenvalue vector (or matrix) lies outside the required Garding cone.
struct ConeMembershipError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A quantity that must be strictly positive is not.
struct PositivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Contact angle outside the supported range (0, pi/2].
struct UnsupportedAngleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A field without a boundary rule was asked for a ghost value.
struct MissingBoundaryPolicyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Curvature operator left the positive cone at some node.
struct NotAdmissibleError : std::runtime_error {
  NotAdmissibleError(const std::string& what, int i, int j, double eig)
      : std::runtime_error(what), node_i(i), node_j(j), min_eigenvalue(eig) {}
  int node_i;
  int node_j;
  double min_eigenvalue;
};

/// Newton failed to reach tolerance within the iteration budget.
struct NoConvergenceError : std::runtime_error {
  NoConvergenceError(const std::string& what, double res, int iters)
      : std::runtime_error(what), last_residual(res), iterations(iters) {}
  double last_residual;
  int iterations;
};

/// Every damped step violated the convexity floor.
struct LostConvexityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Continuation step size fell below its floor before reaching t = 1.
struct ContinuationStuckError : std::runtime_error {
  ContinuationStuckError(const std::string& what, double t, double dt)
      : std::runtime_error(what), t_reached(t), last_step(dt) {}
  double t_reached;
  double last_step;
};

/// Right-hand side is not orthogonal to the kernel of the linearized operator.
struct FredholmCompatibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Perturbation size leaves the convexity window of the family.
struct AdmissibilityWindowError : std::runtime_error {
  AdmissibilityWindowError(const std::string& what, double tmax)
      : std::runtime_error(what), t_max(tmax) {}
  double t_max;
};

/// Field data does not match the grid it is being attached to.
struct GridMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Derivative-free optimizer could not bracket its optimum.
struct OptimizerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A field that must be capillary even is not.
struct EvennessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File or format problem on the I/O surface.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace capcurv
