#include "reason/losses.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace reason::loss {

void ProblemConstants::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(std::string("ProblemConstants: ") + name + " must be positive");
    };
    positive(gamma, "gamma");
    positive(sigma, "sigma");
    positive(lipschitz_g, "lipschitz_g");
    positive(beta_p, "beta_p");
    positive(alpha, "alpha");
    positive(w, "w");
    if (sparsity_s < 1) throw ConfigError("ProblemConstants: sparsity_s must be positive");
    if (rank_r < 0) throw ConfigError("ProblemConstants: rank_r must be nonnegative");
}

ProblemConstants least_squares_constants(double covariate_bound, double r1,
                                         double eta2, int sparsity_s) {
    if (covariate_bound <= 0.0 || r1 <= 0.0 || eta2 < 0.0)
        throw std::invalid_argument("least_squares_constants: bad arguments");
    const double b = covariate_bound;
    const double noise3 = 3.0 * std::sqrt(eta2);
    ProblemConstants c;
    c.gamma = b * b / 3.0;
    c.lipschitz_g = b * (b * r1 + noise3);
    c.sigma = b * (b * r1 + noise3);
    c.sparsity_s = sparsity_s;
    return c;
}

Vector least_squares_grad(const Vector& theta, const Vector& x, double y) {
    if (theta.size() != x.size())
        throw std::invalid_argument("least_squares_grad: dimension mismatch");
    return x * (theta.dot(x) - y);
}

Matrix matrix_square_grad(const Matrix& m, const Matrix& x) {
    if (m.rows() != x.rows() || m.cols() != x.cols())
        throw std::invalid_argument("matrix_square_grad: shape mismatch");
    return m - x;
}

Matrix logdet_grad(const Matrix& theta, const Vector& x) {
    if (theta.rows() != theta.cols() || theta.rows() != x.size())
        throw std::invalid_argument("logdet_grad: shape mismatch");
    // Positive definiteness is enforced by rejection; eigenvalue clipping
    // would mask a radius that lets iterates leave the PD cone.
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success)
        throw DefinitenessError("logdet_grad: matrix is not positive definite");
    const Matrix inverse = llt.solve(Matrix::Identity(theta.rows(), theta.cols()));
    return x * x.transpose() - inverse;
}

Matrix direct_observation_grad(const Matrix& m, const Matrix& x) {
    if (m.rows() != x.rows() || m.cols() != x.cols())
        throw std::invalid_argument("direct_observation_grad: shape mismatch");
    return x;
}

}  // namespace reason::loss
