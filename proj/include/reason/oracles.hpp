#pragma once

#include "reason/datagen.hpp"
#include "reason/losses.hpp"

namespace reason::loss {

/// Least-squares gradients over a regression stream.
class LeastSquaresOracle final : public VectorGradOracle {
  public:
    explicit LeastSquaresOracle(datagen::SparseRegressionStream stream)
        : stream_(std::move(stream)) {}

    Vector gradient(const Vector& theta) override {
        const auto sample = stream_.next();
        ++used_;
        return least_squares_grad(theta, sample.x, sample.y);
    }

    long samples_used() const override { return used_; }

  private:
    datagen::SparseRegressionStream stream_;
    long used_ = 0;
};

/// Log-determinant gradients on vectorized symmetric matrices. The query
/// point is vec(Theta); the result is vec(x x^T - Theta^{-1}).
class LogDetVectorOracle final : public VectorGradOracle {
  public:
    explicit LogDetVectorOracle(datagen::GgmStream stream)
        : stream_(std::move(stream)), p_(stream_.instance().p) {}

    Vector gradient(const Vector& theta) override {
        if (theta.size() != static_cast<Eigen::Index>(p_) * p_)
            throw std::invalid_argument("LogDetVectorOracle: bad query size");
        const Matrix mat = Eigen::Map<const Matrix>(theta.data(), p_, p_);
        const Vector x = stream_.next();
        ++used_;
        const Matrix g = logdet_grad(mat, x);
        return Eigen::Map<const Vector>(g.data(), g.size());
    }

    long samples_used() const override { return used_; }

  private:
    datagen::GgmStream stream_;
    int p_;
    long used_ = 0;
};

/// Square-loss gradients M - X_k over a matrix sample stream.
class MatrixSquareOracle final : public MatrixGradOracle {
  public:
    explicit MatrixSquareOracle(datagen::DecompositionStream stream)
        : stream_(std::move(stream)) {}

    Matrix gradient(const Matrix& m) override {
        const Matrix x = stream_.next();
        ++used_;
        return matrix_square_grad(m, x);
    }

    long samples_used() const override { return used_; }

  private:
    datagen::DecompositionStream stream_;
    long used_ = 0;
};

/// Direct-observation oracle: returns the sample X_k itself so the solver
/// substitutes M <- X_k instead of taking a gradient step.
class DirectObservationOracle final : public MatrixGradOracle {
  public:
    explicit DirectObservationOracle(datagen::DecompositionStream stream)
        : stream_(std::move(stream)) {}

    Matrix gradient(const Matrix& m) override {
        const Matrix x = stream_.next();
        ++used_;
        return direct_observation_grad(m, x);
    }

    long samples_used() const override { return used_; }

  private:
    datagen::DecompositionStream stream_;
    long used_ = 0;
};

/// Square loss against outer products y_k y_k^T of Bayesian-network
/// samples; the covariance decomposition S* + L* is the target.
class OuterProductSquareOracle final : public MatrixGradOracle {
  public:
    explicit OuterProductSquareOracle(datagen::BayesNetStream stream)
        : stream_(std::move(stream)) {}

    Matrix gradient(const Matrix& m) override {
        const Vector y = stream_.next();
        ++used_;
        return matrix_square_grad(m, y * y.transpose());
    }

    long samples_used() const override { return used_; }

  private:
    datagen::BayesNetStream stream_;
    long used_ = 0;
};

}  // namespace reason::loss
