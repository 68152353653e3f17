#pragma once

#include <memory>

#include "reason/types.hpp"

namespace reason::loss {

/// Analysis constants consumed by the theoretical parameter schedules:
/// local strong convexity gamma, sub-Gaussian gradient-noise scale sigma,
/// local Lipschitz constant G, spectral error scale beta(p), spikiness
/// bound alpha, confidence parameter w, and the structural sizes s and r.
struct ProblemConstants {
    double gamma = 1.0;
    double sigma = 1.0;
    double lipschitz_g = 1.0;
    double beta_p = 1.0;
    double alpha = 1.0;
    double w = 1.0;
    int sparsity_s = 1;
    int rank_r = 0;

    void validate() const;
};

/// Conservative constants for least squares with covariates in
/// Unif[-B, B]^d and iterates confined to an l1 ball of radius r1 around
/// the optimum: gamma from the population design covariance (B^2/3), and
/// gradient scales from |e_k|_inf <= B(B r1 + |n_t|) with the noise taken
/// at three standard deviations. The schedules consume these; the paper
/// treats them as known.
ProblemConstants least_squares_constants(double covariate_bound, double r1,
                                         double eta2, int sparsity_s);

/// Gradient of the per-sample loss 0.5 (<theta, x> - y)^2.
Vector least_squares_grad(const Vector& theta, const Vector& x, double y);

/// Gradient of the per-sample loss 0.5 |X - M|_F^2.
Matrix matrix_square_grad(const Matrix& m, const Matrix& x);

/// Gradient of Tr(x x^T Theta) - log det Theta, i.e. x x^T - Theta^{-1}.
/// Throws DefinitenessError when Theta is not positive definite.
Matrix logdet_grad(const Matrix& theta, const Vector& x);

/// Pass-through oracle for the direct-observation setting, where the
/// solver replaces its M iterate by the sample itself.
Matrix direct_observation_grad(const Matrix& m, const Matrix& x);

/// Streaming source of per-sample gradients at a vector query point.
/// Stateful over its sample stream: successive calls consume samples in
/// stream order, and the result is deterministic given (seed, call index,
/// query point). One instance is owned by one solver run.
class VectorGradOracle {
  public:
    virtual ~VectorGradOracle() = default;
    virtual Vector gradient(const Vector& theta) = 0;
    virtual long samples_used() const = 0;
};

/// Matrix-valued counterpart for the decomposition solvers.
class MatrixGradOracle {
  public:
    virtual ~MatrixGradOracle() = default;
    virtual Matrix gradient(const Matrix& m) = 0;
    virtual long samples_used() const = 0;
};

}  // namespace reason::loss
