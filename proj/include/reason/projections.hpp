#pragma once

#include "reason/types.hpp"

namespace reason::prox {

/// Relative tolerance used by all feasibility assertions on projections.
inline constexpr double kFeasibilityTol = 1e-12;

/// An l1 ball { w : |w - center|_1 <= radius }.
struct L1BallSpec {
    Vector center;
    double radius = 0.0;
};

/// A nuclear-norm ball { L : |L - center|_* <= radius }.
struct NuclearBallSpec {
    Matrix center;
    double radius = 0.0;
};

/// Entrywise soft-thresholding: out[j] = sign(v[j]) * max(|v[j]| - kappa, 0).
Vector shrink(const Vector& v, double kappa);
Matrix shrink(const Matrix& v, double kappa);

/// Euclidean projection of v onto the l1 ball. Inputs already inside the
/// ball are returned bit-identically. O(d log d) via sorting the shifted
/// magnitudes (Duchi et al. 2008).
Vector project_l1_ball(const Vector& v, const L1BallSpec& ball);

/// Convenience overload for a centered ball of the given radius.
Vector project_l1_ball(const Vector& v, const Vector& center, double radius);

/// Entrywise clamp onto { V : |V|_inf <= bound }.
Matrix project_linf_box(const Matrix& v, double bound);

/// Projection onto the nuclear-norm ball: SVD of (L - center), l1 projection
/// of the singular values, then reassembly. Interior points are returned
/// unchanged.
Matrix project_nuclear_ball(const Matrix& l, const NuclearBallSpec& ball);
Matrix project_nuclear_ball(const Matrix& l, const Matrix& center,
                            double radius);

/// Sum of singular values.
double nuclear_norm(const Matrix& m);

}  // namespace reason::prox
