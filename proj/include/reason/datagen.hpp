#pragma once

#include <cstdint>
#include <optional>

#include "reason/rng.hpp"
#include "reason/types.hpp"

namespace reason::datagen {

// Every stream below is a deterministic function of (seed, index):
// sample k is generated from its own derived generator, so regenerating
// with the same seed yields bit-identical values and cloning a stream at
// an offset is a cursor copy. Streams are single-consumer; next() throws
// StreamError once an optional sample budget is exhausted.

// ---------------------------------------------------------------------------
// Sparse linear regression: y_t = <theta*, x_t> + n_t, x_t ~ Unif[-B, B]^d.

struct SparseRegressionInstance {
    Vector theta_star;
    double covariate_bound = 1.0;  // B
    double eta2 = 0.0;             // noise variance
    int d = 0;
    int s = 0;
};

struct RegressionSample {
    Vector x;
    double y = 0.0;
};

class SparseRegressionStream {
  public:
    SparseRegressionStream(SparseRegressionInstance inst, std::uint64_t seed,
                           long limit = -1);

    const SparseRegressionInstance& instance() const { return inst_; }
    RegressionSample at(long index) const;
    RegressionSample next();
    SparseRegressionStream clone_at(long index) const;
    long cursor() const { return cursor_; }

  private:
    SparseRegressionInstance inst_;
    std::uint64_t seed_;
    long cursor_ = 0;
    long limit_;
};

/// theta* has exactly s nonzero entries, values +-1 at a uniformly chosen
/// support with uniform signs.
SparseRegressionStream gen_sparse_regression(int d, int s, double covariate_bound,
                                             double eta2, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Independent-noise matrix decomposition: X_k = S* + L* + N_k.

struct DecompositionInstance {
    Matrix s_star;
    Matrix l_star;
    double sigma2 = 0.0;
    int p = 0;
    int s = 0;
    int r = 0;
    double alpha = 1.0;

    Matrix m_star() const { return s_star + l_star; }
};

class DecompositionStream {
  public:
    DecompositionStream(DecompositionInstance inst, std::uint64_t seed,
                        long limit = -1);

    const DecompositionInstance& instance() const { return inst_; }
    Matrix at(long index) const;
    Matrix next();
    DecompositionStream clone_at(long index) const;
    long cursor() const { return cursor_; }

  private:
    DecompositionInstance inst_;
    std::uint64_t seed_;
    long cursor_ = 0;
    long limit_;
};

/// L* is a rank-r sum of unit Gaussian outer products rescaled so that
/// |L*|_inf = alpha/p exactly; S* sits on s uniformly chosen cells with
/// magnitude s_magnitude (which must exceed L*'s entry scale alpha/p).
DecompositionStream gen_independent_noise(int p, int s, int r, double alpha,
                                          double sigma2, std::uint64_t seed,
                                          double s_magnitude = 1.0);

// ---------------------------------------------------------------------------
// Linear Bayesian network: y = A h + n with unit-normalized generic A.

struct BayesNetInstance {
    Matrix a;  // p x r, unit-norm columns
    double sigma_h2 = 1.0;
    double sigma_n2 = 1.0;
    int p = 0;
    int r = 0;

    Matrix s_star() const { return sigma_n2 * Matrix::Identity(p, p); }
    Matrix l_star() const { return sigma_h2 * a * a.transpose(); }
    Matrix sigma_star() const { return s_star() + l_star(); }
};

class BayesNetStream {
  public:
    BayesNetStream(BayesNetInstance inst, std::uint64_t seed, long limit = -1);

    const BayesNetInstance& instance() const { return inst_; }
    Vector at(long index) const;
    Vector next();
    BayesNetStream clone_at(long index) const;
    long cursor() const { return cursor_; }

  private:
    BayesNetInstance inst_;
    std::uint64_t seed_;
    long cursor_ = 0;
    long limit_;
};

BayesNetStream gen_bayes_net(int p, int r, double sigma_h2, double sigma_n2,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gaussian graphical models: x ~ N(0, Theta*^{-1}) with sparse Theta*.

enum class GgmStructure { Chain, Grid, Random };

struct GgmInstance {
    Matrix theta_star;
    Matrix sigma_star;      // Theta*^{-1}
    Matrix sigma_chol;      // lower Cholesky factor of sigma_star
    int p = 0;
};

class GgmStream {
  public:
    GgmStream(GgmInstance inst, std::uint64_t seed, long limit = -1);

    const GgmInstance& instance() const { return inst_; }
    Vector at(long index) const;
    Vector next();
    GgmStream clone_at(long index) const;
    long cursor() const { return cursor_; }

  private:
    GgmInstance inst_;
    std::uint64_t seed_;
    long cursor_ = 0;
    long limit_;
};

/// Chain: tridiagonal with unit diagonal and `offdiag` couplings.
/// Grid: 4-neighbor lattice (p must be a perfect square).
/// Random: `edge_count` uniformly chosen symmetric off-diagonal pairs.
/// The diagonal is inflated until the matrix is positive definite.
GgmStream gen_ggm(int p, GgmStructure structure, std::uint64_t seed,
                  int edge_count = 0, double offdiag = -0.4);

}  // namespace reason::datagen
