#include "reason/projections.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace reason::prox {

namespace {

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

// Threshold zeta such that sum_j max(mag[j] - zeta, 0) = radius, for a
// vector of magnitudes whose l1 norm exceeds radius. Sort-based rule:
//   kappa = max { j : mu_j - (1/j)(sum_{i<=j} mu_i - R) > 0 },
//   zeta  = (1/kappa)(sum_{i<=kappa} mu_i - R).
// Returns a negative value when no index qualifies (possible only when
// R = 0); callers map that to the ball center.
double l1_threshold(std::vector<double> mags, double radius) {
    std::stable_sort(mags.begin(), mags.end(), std::greater<double>());
    double cumsum = 0.0;
    double zeta = -1.0;
    for (std::size_t j = 0; j < mags.size(); ++j) {
        cumsum += mags[j];
        const double candidate = (cumsum - radius) / static_cast<double>(j + 1);
        if (mags[j] - candidate > 0.0) zeta = candidate;
    }
    return zeta;
}

}  // namespace

Vector shrink(const Vector& v, double kappa) {
    if (kappa < 0.0 || !std::isfinite(kappa))
        throw std::invalid_argument("shrink: kappa must be nonnegative");
    require_finite(v, "shrink");
    return v.array().sign() * (v.array().abs() - kappa).max(0.0);
}

Matrix shrink(const Matrix& v, double kappa) {
    if (kappa < 0.0 || !std::isfinite(kappa))
        throw std::invalid_argument("shrink: kappa must be nonnegative");
    require_finite(v, "shrink");
    return v.array().sign() * (v.array().abs() - kappa).max(0.0);
}

Vector project_l1_ball(const Vector& v, const L1BallSpec& ball) {
    if (ball.radius < 0.0 || !std::isfinite(ball.radius))
        throw std::invalid_argument("project_l1_ball: radius must be nonnegative");
    if (v.size() != ball.center.size())
        throw std::invalid_argument("project_l1_ball: dimension mismatch");
    require_finite(v, "project_l1_ball");
    require_finite(ball.center, "project_l1_ball");

    const Vector shifted = v - ball.center;
    if (shifted.lpNorm<1>() <= ball.radius) return v;
    if (ball.radius == 0.0) return ball.center;

    std::vector<double> mags(shifted.size());
    for (Eigen::Index i = 0; i < shifted.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(shifted[i]);
    const double zeta = l1_threshold(std::move(mags), ball.radius);
    if (zeta < 0.0) return ball.center;
    return ball.center + shrink(shifted, zeta);
}

Vector project_l1_ball(const Vector& v, const Vector& center, double radius) {
    return project_l1_ball(v, L1BallSpec{center, radius});
}

Matrix project_linf_box(const Matrix& v, double bound) {
    if (bound < 0.0 || !std::isfinite(bound))
        throw std::invalid_argument("project_linf_box: bound must be nonnegative");
    require_finite(v, "project_linf_box");
    return v.array().min(bound).max(-bound);
}

double nuclear_norm(const Matrix& m) {
    return Eigen::BDCSVD<Matrix>(m).singularValues().sum();
}

Matrix project_nuclear_ball(const Matrix& l, const NuclearBallSpec& ball) {
    if (ball.radius < 0.0 || !std::isfinite(ball.radius))
        throw std::invalid_argument("project_nuclear_ball: radius must be nonnegative");
    if (l.rows() != ball.center.rows() || l.cols() != ball.center.cols())
        throw std::invalid_argument("project_nuclear_ball: shape mismatch");
    require_finite(l, "project_nuclear_ball");

    const Matrix shifted = l - ball.center;
    // Values-only pass decides feasibility; the full factorization is only
    // paid when a projection actually happens.
    {
        Eigen::BDCSVD<Matrix> values(shifted);
        if (values.info() != Eigen::Success)
            throw std::runtime_error("project_nuclear_ball: SVD failed on a " +
                                     std::to_string(l.rows()) + "x" +
                                     std::to_string(l.cols()) + " matrix");
        if (values.singularValues().sum() <= ball.radius) return l;
    }
    if (ball.radius == 0.0) return ball.center;

    Eigen::BDCSVD<Matrix> svd(shifted, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw std::runtime_error("project_nuclear_ball: SVD failed on a " +
                                 std::to_string(l.rows()) + "x" + std::to_string(l.cols()) +
                                 " matrix");
    const Vector& sv = svd.singularValues();

    // The singular values are a nonnegative vector; project them onto the
    // l1 ball of the given radius and rebuild.
    const Vector projected = project_l1_ball(sv, Vector::Zero(sv.size()), ball.radius);
    return ball.center +
           svd.matrixU() * projected.asDiagonal() * svd.matrixV().transpose();
}

Matrix project_nuclear_ball(const Matrix& l, const Matrix& center, double radius) {
    return project_nuclear_ball(l, NuclearBallSpec{center, radius});
}

}  // namespace reason::prox
