#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace reason {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a symmetric matrix that must be positive definite is not.
/// Signals that an iterate left the PD cone; callers should shrink the
/// search radius rather than repair the matrix.
struct DefinitenessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a sample stream runs past its configured budget.
struct StreamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown on harness-level I/O failures (maps to exit code 2).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown on invalid configuration (maps to exit code 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Vectorized matrix norms: |X|_1 = sum |x_ij|, |X|_inf = max |x_ij|.
inline double l1_norm(const Vector& v) { return v.lpNorm<1>(); }
inline double l1_norm(const Matrix& m) { return m.cwiseAbs().sum(); }
inline double linf_norm(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace reason
