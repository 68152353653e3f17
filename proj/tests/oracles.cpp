#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace reason::testing {

namespace {

Vector soft(const Vector& v, double kappa) {
    return v.array().sign() * (v.array().abs() - kappa).max(0.0);
}

}  // namespace

Vector l1_project_bisection(const Vector& v, const Vector& center, double radius) {
    const Vector w = v - center;
    if (w.lpNorm<1>() <= radius) return v;
    if (radius == 0.0) return center;
    // |soft(w, zeta)|_1 is continuous and strictly decreasing in zeta until
    // it hits zero; bisect for the zeta where it equals the radius.
    double lo = 0.0, hi = w.lpNorm<Eigen::Infinity>();
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (soft(w, mid).lpNorm<1>() > radius) lo = mid;
        else hi = mid;
    }
    return center + soft(w, 0.5 * (lo + hi));
}

Vector l1_project_enumeration(const Vector& v, const Vector& center, double radius) {
    const Eigen::Index d = v.size();
    if (d > 20) throw std::invalid_argument("l1_project_enumeration: dimension too large");
    const Vector w = v - center;
    if (w.lpNorm<1>() <= radius) return v;
    if (radius == 0.0) return center;

    // KKT: the projection has the form sign(w_i) max(|w_i| - zeta, 0) with
    // zeta = (sum_{i in A} |w_i| - radius)/|A| for the active set A of
    // surviving coordinates. Enumerate all candidate supports.
    double best_dist = std::numeric_limits<double>::infinity();
    Vector best = center;
    for (unsigned long mask = 1; mask < (1UL << d); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (Eigen::Index i = 0; i < d; ++i)
            if (mask & (1UL << i)) {
                sum += std::abs(w[i]);
                ++count;
            }
        const double zeta = (sum - radius) / count;
        if (zeta < 0.0) continue;
        bool consistent = true;
        for (Eigen::Index i = 0; i < d && consistent; ++i) {
            const bool active = mask & (1UL << i);
            if (active && std::abs(w[i]) <= zeta) consistent = false;
            if (!active && std::abs(w[i]) > zeta) consistent = false;
        }
        if (!consistent) continue;
        const Vector candidate = soft(w, zeta);
        const double dist = (candidate - w).squaredNorm();
        if (dist < best_dist) {
            best_dist = dist;
            best = center + candidate;
        }
    }
    return best;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& x, double h) {
    Vector g(x.size());
    Vector probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

Vector batch_lasso(const std::vector<Vector>& xs, const std::vector<double>& ys,
                   double lambda, double tol, long max_iters) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("batch_lasso: bad data");
    const Eigen::Index d = xs[0].size();
    const double n = static_cast<double>(xs.size());
    Matrix gram = Matrix::Zero(d, d);
    Vector xty = Vector::Zero(d);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        gram += xs[i] * xs[i].transpose();
        xty += ys[i] * xs[i];
    }
    gram /= n;
    xty /= n;
    const double lip = Eigen::SelfAdjointEigenSolver<Matrix>(gram).eigenvalues().maxCoeff();
    const double step = 1.0 / lip;

    Vector theta = Vector::Zero(d);
    for (long k = 0; k < max_iters; ++k) {
        const Vector grad = gram * theta - xty;
        const Vector next = soft(theta - step * grad, step * lambda);
        const double move = (next - theta).lpNorm<Eigen::Infinity>();
        theta = next;
        if (move < tol) break;
    }
    return theta;
}

namespace {

// min over s of (c/2)(s - v)^2 + lambda |s| + nu |s - shift|. The optimum is
// a breakpoint (0 or shift) or a stationary point of one of the four smooth
// regions; evaluating all candidates is exact.
double scalar_min(double v, double shift, double lambda, double nu, double c,
                  double* arg) {
    const auto value = [&](double s) {
        return 0.5 * c * (s - v) * (s - v) + lambda * std::abs(s) +
               nu * std::abs(s - shift);
    };
    double best_s = 0.0;
    double best = value(0.0);
    const double at_shift = value(shift);
    if (at_shift < best) {
        best = at_shift;
        best_s = shift;
    }
    for (const double s1 : {-1.0, 1.0})
        for (const double s2 : {-1.0, 1.0}) {
            const double s = v - (s1 * lambda + s2 * nu) / c;
            const double val = value(s);
            if (val < best) {
                best = val;
                best_s = s;
            }
        }
    if (arg) *arg = best_s;
    return best;
}

}  // namespace

ConstrainedProxSolution constrained_l1_prox(const Vector& v, const Vector& center,
                                            double radius, double lambda,
                                            double curvature) {
    const Eigen::Index d = v.size();
    const auto solve_at = [&](double nu) {
        Vector s(d);
        for (Eigen::Index i = 0; i < d; ++i)
            scalar_min(v[i], center[i], lambda, nu, curvature, &s[i]);
        return s;
    };
    const auto ball_gap = [&](const Vector& s) {
        return (s - center).lpNorm<1>() - radius;
    };

    Vector s = solve_at(0.0);
    if (ball_gap(s) > 0.0) {
        double lo = 0.0;
        double hi = curvature * (v - center).lpNorm<Eigen::Infinity>() + lambda + 1.0;
        while (ball_gap(solve_at(hi)) > 0.0) hi *= 2.0;
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (ball_gap(solve_at(mid)) > 0.0) lo = mid;
            else hi = mid;
        }
        s = solve_at(hi);
    }
    ConstrainedProxSolution out;
    out.minimizer = s;
    out.objective = lambda * s.lpNorm<1>() + 0.5 * curvature * (s - v).squaredNorm();
    return out;
}

ConstrainedProxSolution constrained_nuclear_prox(const Matrix& a, double radius,
                                                 double mu, double rho) {
    // With the ball centered at zero both terms are unitarily invariant, so
    // the solution shares A's singular vectors and the problem reduces to
    // the singular values: s_i = max(sigma_i - (mu + nu)/rho, 0) with nu the
    // ball multiplier.
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector sigma = svd.singularValues();
    const auto values_at = [&](double nu) {
        return Vector(((sigma.array() - (mu + nu) / rho).max(0.0)).matrix());
    };

    Vector s = values_at(0.0);
    if (s.sum() > radius) {
        double lo = 0.0, hi = rho * sigma.maxCoeff() + mu + 1.0;
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (values_at(mid).sum() > radius) lo = mid;
            else hi = mid;
        }
        s = values_at(hi);
    }
    ConstrainedProxSolution out;
    out.minimizer = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    out.objective = mu * s.sum() + 0.5 * rho * (out.minimizer - a).squaredNorm();
    return out;
}

}  // namespace reason::testing
