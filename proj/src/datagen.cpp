#include "reason/datagen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace reason::datagen {

namespace {

// Stream ids for sub-seed derivation.
enum : std::uint64_t {
    kInstanceSupport = 1,
    kInstanceValues = 2,
    kInstanceFactors = 3,
    kSample = 4,
};

void check_limit(long cursor, long limit, const char* what) {
    if (limit >= 0 && cursor >= limit)
        throw StreamError(std::string(what) + ": sample budget exhausted at index " +
                          std::to_string(cursor));
}

// First `count` positions of a Fisher-Yates shuffle of [0, n).
std::vector<long> sample_without_replacement(long n, long count, rng::Rng& r) {
    std::vector<long> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0L);
    for (long i = 0; i < count; ++i) {
        const long j = i + static_cast<long>(r.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(count));
    return idx;
}

}  // namespace

// --------------------------------------------------------------------------
// Sparse regression

SparseRegressionStream::SparseRegressionStream(SparseRegressionInstance inst,
                                               std::uint64_t seed, long limit)
    : inst_(std::move(inst)), seed_(seed), limit_(limit) {}

RegressionSample SparseRegressionStream::at(long index) const {
    rng::Rng r = rng::at(seed_, kSample, static_cast<std::uint64_t>(index));
    RegressionSample sample;
    sample.x.resize(inst_.d);
    const double b = inst_.covariate_bound;
    for (int i = 0; i < inst_.d; ++i) sample.x[i] = r.uniform(-b, b);
    double noise = 0.0;
    if (inst_.eta2 > 0.0) noise = std::sqrt(inst_.eta2) * r.normal();
    sample.y = inst_.theta_star.dot(sample.x) + noise;
    return sample;
}

RegressionSample SparseRegressionStream::next() {
    check_limit(cursor_, limit_, "SparseRegressionStream");
    return at(cursor_++);
}

SparseRegressionStream SparseRegressionStream::clone_at(long index) const {
    SparseRegressionStream copy(*this);
    copy.cursor_ = index;
    return copy;
}

SparseRegressionStream gen_sparse_regression(int d, int s, double covariate_bound,
                                             double eta2, std::uint64_t seed) {
    if (s < 1 || s > d) throw std::invalid_argument("gen_sparse_regression: need 1 <= s <= d");
    if (covariate_bound <= 0.0) throw std::invalid_argument("gen_sparse_regression: B must be positive");
    if (eta2 < 0.0) throw std::invalid_argument("gen_sparse_regression: eta2 must be nonnegative");

    SparseRegressionInstance inst;
    inst.d = d;
    inst.s = s;
    inst.covariate_bound = covariate_bound;
    inst.eta2 = eta2;
    inst.theta_star = Vector::Zero(d);

    rng::Rng support_rng = rng::at(seed, kInstanceSupport, 0);
    const auto support = sample_without_replacement(d, s, support_rng);
    rng::Rng sign_rng = rng::at(seed, kInstanceValues, 0);
    for (long j : support)
        inst.theta_star[j] = (sign_rng.uniform() < 0.5) ? -1.0 : 1.0;

    int nonzeros = 0;
    for (int i = 0; i < d; ++i) nonzeros += inst.theta_star[i] != 0.0;
    if (nonzeros != s) throw std::runtime_error("gen_sparse_regression: sparsity invariant failed");

    return SparseRegressionStream(std::move(inst), seed);
}

// --------------------------------------------------------------------------
// Independent-noise decomposition

DecompositionStream::DecompositionStream(DecompositionInstance inst,
                                         std::uint64_t seed, long limit)
    : inst_(std::move(inst)), seed_(seed), limit_(limit) {}

Matrix DecompositionStream::at(long index) const {
    rng::Rng r = rng::at(seed_, kSample, static_cast<std::uint64_t>(index));
    Matrix x = inst_.s_star + inst_.l_star;
    if (inst_.sigma2 > 0.0) {
        const double sd = std::sqrt(inst_.sigma2);
        for (int i = 0; i < inst_.p; ++i)
            for (int j = 0; j < inst_.p; ++j) x(i, j) += sd * r.normal();
    }
    return x;
}

Matrix DecompositionStream::next() {
    check_limit(cursor_, limit_, "DecompositionStream");
    return at(cursor_++);
}

DecompositionStream DecompositionStream::clone_at(long index) const {
    DecompositionStream copy(*this);
    copy.cursor_ = index;
    return copy;
}

DecompositionStream gen_independent_noise(int p, int s, int r, double alpha,
                                          double sigma2, std::uint64_t seed,
                                          double s_magnitude) {
    if (p < 1) throw std::invalid_argument("gen_independent_noise: p must be positive");
    if (s < 0 || static_cast<long>(s) > static_cast<long>(p) * p)
        throw std::invalid_argument("gen_independent_noise: need 0 <= s <= p^2");
    if (r < 0 || r > p) throw std::invalid_argument("gen_independent_noise: need 0 <= r <= p");
    if (alpha <= 0.0) throw std::invalid_argument("gen_independent_noise: alpha must be positive");
    if (sigma2 < 0.0) throw std::invalid_argument("gen_independent_noise: sigma2 must be nonnegative");

    DecompositionInstance inst;
    inst.p = p;
    inst.s = s;
    inst.r = r;
    inst.alpha = alpha;
    inst.sigma2 = sigma2;
    inst.s_star = Matrix::Zero(p, p);
    inst.l_star = Matrix::Zero(p, p);

    const double spikiness = alpha / p;

    if (r > 0) {
        rng::Rng f = rng::at(seed, kInstanceFactors, 0);
        Matrix low = Matrix::Zero(p, p);
        for (int j = 0; j < r; ++j) {
            Vector u(p), v(p);
            for (int i = 0; i < p; ++i) u[i] = f.normal();
            for (int i = 0; i < p; ++i) v[i] = f.normal();
            u.normalize();
            v.normalize();
            low += u * v.transpose();
        }
        // Rescale (rather than reject) so the spikiness bound holds with
        // equality; rescaling preserves the rank.
        const double peak = linf_norm(low);
        inst.l_star = (spikiness / peak) * low;

        const Eigen::FullPivLU<Matrix> lu(inst.l_star);
        if (lu.rank() != r) throw std::runtime_error("gen_independent_noise: rank invariant failed");
        if (linf_norm(inst.l_star) > spikiness * (1.0 + 1e-12))
            throw std::runtime_error("gen_independent_noise: spikiness invariant failed");
    }

    if (s > 0) {
        if (s_magnitude <= spikiness)
            throw std::invalid_argument(
                "gen_independent_noise: sparse magnitude must exceed alpha/p");
        rng::Rng cells = rng::at(seed, kInstanceSupport, 0);
        const auto support =
            sample_without_replacement(static_cast<long>(p) * p, s, cells);
        rng::Rng sign_rng = rng::at(seed, kInstanceValues, 0);
        for (long cell : support) {
            const int i = static_cast<int>(cell / p);
            const int j = static_cast<int>(cell % p);
            inst.s_star(i, j) = (sign_rng.uniform() < 0.5) ? -s_magnitude : s_magnitude;
        }
    }

    return DecompositionStream(std::move(inst), seed);
}

// --------------------------------------------------------------------------
// Linear Bayesian network

BayesNetStream::BayesNetStream(BayesNetInstance inst, std::uint64_t seed, long limit)
    : inst_(std::move(inst)), seed_(seed), limit_(limit) {}

Vector BayesNetStream::at(long index) const {
    rng::Rng r = rng::at(seed_, kSample, static_cast<std::uint64_t>(index));
    Vector h(inst_.r), n(inst_.p);
    const double sh = std::sqrt(inst_.sigma_h2);
    const double sn = std::sqrt(inst_.sigma_n2);
    for (int i = 0; i < inst_.r; ++i) h[i] = sh * r.normal();
    for (int i = 0; i < inst_.p; ++i) n[i] = sn * r.normal();
    return inst_.a * h + n;
}

Vector BayesNetStream::next() {
    check_limit(cursor_, limit_, "BayesNetStream");
    return at(cursor_++);
}

BayesNetStream BayesNetStream::clone_at(long index) const {
    BayesNetStream copy(*this);
    copy.cursor_ = index;
    return copy;
}

BayesNetStream gen_bayes_net(int p, int r, double sigma_h2, double sigma_n2,
                             std::uint64_t seed) {
    if (p < 1 || r < 0 || r > p) throw std::invalid_argument("gen_bayes_net: need 0 <= r <= p");
    if (sigma_h2 < 0.0 || sigma_n2 < 0.0)
        throw std::invalid_argument("gen_bayes_net: variances must be nonnegative");

    BayesNetInstance inst;
    inst.p = p;
    inst.r = r;
    inst.sigma_h2 = sigma_h2;
    inst.sigma_n2 = sigma_n2;
    inst.a = Matrix::Zero(p, r);
    rng::Rng f = rng::at(seed, kInstanceFactors, 0);
    for (int j = 0; j < r; ++j) {
        Vector col(p);
        for (int i = 0; i < p; ++i) col[i] = f.normal();
        col.normalize();
        inst.a.col(j) = col;
    }
    return BayesNetStream(std::move(inst), seed);
}

// --------------------------------------------------------------------------
// Gaussian graphical models

GgmStream::GgmStream(GgmInstance inst, std::uint64_t seed, long limit)
    : inst_(std::move(inst)), seed_(seed), limit_(limit) {}

Vector GgmStream::at(long index) const {
    rng::Rng r = rng::at(seed_, kSample, static_cast<std::uint64_t>(index));
    Vector z(inst_.p);
    for (int i = 0; i < inst_.p; ++i) z[i] = r.normal();
    return inst_.sigma_chol * z;
}

Vector GgmStream::next() {
    check_limit(cursor_, limit_, "GgmStream");
    return at(cursor_++);
}

GgmStream GgmStream::clone_at(long index) const {
    GgmStream copy(*this);
    copy.cursor_ = index;
    return copy;
}

GgmStream gen_ggm(int p, GgmStructure structure, std::uint64_t seed,
                  int edge_count, double offdiag) {
    if (p < 1) throw std::invalid_argument("gen_ggm: p must be positive");

    Matrix theta = Matrix::Identity(p, p);
    switch (structure) {
        case GgmStructure::Chain:
            for (int i = 0; i + 1 < p; ++i) {
                theta(i, i + 1) = offdiag;
                theta(i + 1, i) = offdiag;
            }
            break;
        case GgmStructure::Grid: {
            const int side = static_cast<int>(std::lround(std::sqrt(double(p))));
            if (side * side != p)
                throw std::invalid_argument("gen_ggm: grid structure needs a square p");
            auto id = [side](int row, int col) { return row * side + col; };
            for (int row = 0; row < side; ++row)
                for (int col = 0; col < side; ++col) {
                    if (col + 1 < side) {
                        theta(id(row, col), id(row, col + 1)) = offdiag;
                        theta(id(row, col + 1), id(row, col)) = offdiag;
                    }
                    if (row + 1 < side) {
                        theta(id(row, col), id(row + 1, col)) = offdiag;
                        theta(id(row + 1, col), id(row, col)) = offdiag;
                    }
                }
            break;
        }
        case GgmStructure::Random: {
            const long pairs = static_cast<long>(p) * (p - 1) / 2;
            if (edge_count < 0 || edge_count > pairs)
                throw std::invalid_argument("gen_ggm: bad edge count");
            rng::Rng r = rng::at(seed, kInstanceSupport, 0);
            const auto chosen = sample_without_replacement(pairs, edge_count, r);
            for (long idx : chosen) {
                // Unrank the (i, j) pair, i < j.
                long rest = idx;
                int i = 0;
                while (rest >= p - 1 - i) {
                    rest -= p - 1 - i;
                    ++i;
                }
                const int j = i + 1 + static_cast<int>(rest);
                theta(i, j) = offdiag;
                theta(j, i) = offdiag;
            }
            break;
        }
    }

    // Inflate the diagonal until positive definite.
    Eigen::LLT<Matrix> llt(theta);
    int tries = 0;
    while (llt.info() != Eigen::Success) {
        if (++tries > 40) throw std::runtime_error("gen_ggm: failed to reach a PD matrix");
        theta.diagonal().array() += 0.25;
        llt.compute(theta);
    }

    GgmInstance inst;
    inst.p = p;
    inst.theta_star = theta;
    inst.sigma_star = llt.solve(Matrix::Identity(p, p));
    const Eigen::LLT<Matrix> sig_llt(inst.sigma_star);
    if (sig_llt.info() != Eigen::Success)
        throw std::runtime_error("gen_ggm: covariance factorization failed");
    inst.sigma_chol = sig_llt.matrixL();
    return GgmStream(std::move(inst), seed);
}

}  // namespace reason::datagen
