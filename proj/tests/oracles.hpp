#pragma once

// Test-only reference implementations. Each one reaches the quantity under
// test by a different route than the library (multiplier bisection, KKT
// enumeration, finite differences, batch proximal gradient) so agreement is
// meaningful evidence, not a tautology.

#include <functional>
#include <vector>

#include "reason/types.hpp"

namespace reason::testing {

/// Euclidean projection onto {w : |w - center|_1 <= radius} by bisection on
/// the Lagrange multiplier of the l1 constraint.
Vector l1_project_bisection(const Vector& v, const Vector& center, double radius);

/// Same projection by exhaustive enumeration of active sets (KKT support
/// patterns). Exponential in dimension; use d <= 12.
Vector l1_project_enumeration(const Vector& v, const Vector& center, double radius);

/// Central finite differences of a scalar function.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& x, double h = 1e-5);

/// Batch lasso argmin of (1/n) sum 0.5 (<x_i, theta> - y_i)^2 + lambda |theta|_1
/// by proximal gradient, iterated until the step moves less than `tol`.
Vector batch_lasso(const std::vector<Vector>& xs, const std::vector<double>& ys,
                   double lambda, double tol = 1e-12, long max_iters = 2000000);

/// Exact solution of the ball-constrained l1 prox problem
///   min lambda |s|_1 + (curvature/2) |s - v|_2^2   s.t. |s - center|_1 <= radius
/// by bisection on the constraint multiplier with per-coordinate exact
/// minimization. Returns the optimal objective value and the minimizer.
struct ConstrainedProxSolution {
    Vector minimizer;
    double objective = 0.0;
};
ConstrainedProxSolution constrained_l1_prox(const Vector& v, const Vector& center,
                                            double radius, double lambda,
                                            double curvature);

/// Exact solution of the nuclear-ball-constrained nuclear prox problem with
/// a ball centered at zero:
///   min mu |L|_* + (rho/2) |L - A|_F^2   s.t. |L|_* <= radius
/// by bisection on the constraint multiplier in the singular-value domain.
ConstrainedProxSolution constrained_nuclear_prox(const Matrix& a, double radius,
                                                 double mu, double rho);

}  // namespace reason::testing
