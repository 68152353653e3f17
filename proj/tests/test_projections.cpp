#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "reason/projections.hpp"
#include "reason/rng.hpp"

using namespace reason;
using prox::L1BallSpec;
using prox::NuclearBallSpec;

namespace {

Vector random_vector(rng::Rng& r, int d, double scale = 2.0) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = r.uniform(-scale, scale);
    return v;
}

Matrix random_matrix(rng::Rng& r, int rows, int cols, double scale = 2.0) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = r.uniform(-scale, scale);
    return m;
}

}  // namespace

TEST_SUITE("projections") {

TEST_CASE("shrink basics") {
    Vector v(1);
    v << 3.0;
    CHECK(prox::shrink(v, 1.0)[0] == doctest::Approx(2.0));

    Vector small(2);
    small << -0.5, 0.2;
    const Vector out = prox::shrink(small, 1.0);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);

    rng::Rng r(7);
    const Vector rand = random_vector(r, 12);
    CHECK((prox::shrink(rand, 0.0) - rand).lpNorm<Eigen::Infinity>() == 0.0);

    CHECK_THROWS_AS(prox::shrink(rand, -0.1), std::invalid_argument);
}

TEST_CASE("shrink magnitude identity") {
    // |v| = |shrink(v, kappa)| + min(|v|, kappa), the scalar Moreau split.
    rng::Rng r(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const double v = r.uniform(-5.0, 5.0);
        const double kappa = r.uniform(0.0, 3.0);
        Vector vv(1);
        vv << v;
        const double shrunk = prox::shrink(vv, kappa)[0];
        CHECK(std::abs(v) ==
              doctest::Approx(std::abs(shrunk) + std::min(std::abs(v), kappa))
                  .epsilon(1e-12));
    }
}

TEST_CASE("l1 ball projection examples") {
    Vector v(2);
    v << 0.5, 0.3;
    const Vector inside = prox::project_l1_ball(v, Vector::Zero(2), 1.0);
    CHECK(inside == v);  // bit-identical interior return

    v << 2.0, 0.0;
    const Vector clipped = prox::project_l1_ball(v, Vector::Zero(2), 1.0);
    CHECK(clipped[0] == doctest::Approx(1.0));
    CHECK(clipped[1] == doctest::Approx(0.0));

    v << 1.0, 1.0;
    const Vector split = prox::project_l1_ball(v, Vector::Zero(2), 1.0);
    CHECK(split[0] == doctest::Approx(0.5));
    CHECK(split[1] == doctest::Approx(0.5));
}

TEST_CASE("l1 ball projection edge cases") {
    Vector v(3);
    v << 1.0, -2.0, 3.0;
    const Vector center = (Vector(3) << 0.5, 0.5, 0.5).finished();
    // Zero radius returns the center.
    CHECK(prox::project_l1_ball(v, center, 0.0) == center);

    Vector bad(3);
    bad << 1.0, std::nan(""), 0.0;
    CHECK_THROWS_AS(prox::project_l1_ball(bad, center, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(prox::project_l1_ball(v, center, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(prox::project_l1_ball(v, Vector::Zero(2), 1.0), std::invalid_argument);
}

TEST_CASE("l1 ball projection matches bisection and KKT enumeration") {
    rng::Rng r(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 1 + static_cast<int>(r.below(8));
        const Vector v = random_vector(r, d);
        const Vector center = random_vector(r, d, 0.5);
        const double radius = r.uniform(0.0, 2.0);
        const Vector ours = prox::project_l1_ball(v, center, radius);
        const Vector ref = testing::l1_project_bisection(v, center, radius);
        CHECK((ours - ref).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
    // Enumeration cross-check on small dimensions.
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(r.below(5));
        const Vector v = random_vector(r, d);
        const Vector center = random_vector(r, d, 0.5);
        const double radius = r.uniform(0.0, 1.5);
        const Vector ours = prox::project_l1_ball(v, center, radius);
        const Vector bis = testing::l1_project_bisection(v, center, radius);
        const Vector enu = testing::l1_project_enumeration(v, center, radius);
        CHECK((bis - enu).lpNorm<Eigen::Infinity>() <= 1e-9);
        CHECK((ours - enu).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
}

TEST_CASE("linf box projection") {
    Matrix v(1, 2);
    v << 2.0, -3.0;
    const Matrix out = prox::project_linf_box(v, 1.0);
    CHECK(out(0, 0) == doctest::Approx(1.0));
    CHECK(out(0, 1) == doctest::Approx(-1.0));

    Matrix tiny(1, 1);
    tiny << 0.1;
    CHECK(prox::project_linf_box(tiny, 0.5)(0, 0) == doctest::Approx(0.1));

    rng::Rng r(5);
    const Matrix m = random_matrix(r, 3, 4);
    CHECK(prox::project_linf_box(m, 0.0).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(prox::project_linf_box(m, -1.0), std::invalid_argument);
}

TEST_CASE("nuclear ball projection examples") {
    Matrix l = Matrix::Zero(2, 2);
    l(0, 0) = 2.0;
    const Matrix out = prox::project_nuclear_ball(l, Matrix::Zero(2, 2), 1.0);
    CHECK(out(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(out(1, 1)) <= 1e-12);

    // Interior points come back bit-identically.
    Matrix small = Matrix::Zero(2, 2);
    small(0, 0) = 0.4;
    small(1, 1) = 0.3;
    CHECK(prox::project_nuclear_ball(small, Matrix::Zero(2, 2), 1.0) == small);

    // Zero radius returns the center.
    rng::Rng r(3);
    const Matrix center = random_matrix(r, 3, 3, 0.5);
    const Matrix far = random_matrix(r, 3, 3);
    CHECK(prox::project_nuclear_ball(far, center, 0.0) == center);
}

TEST_CASE("nuclear projection equals l1 projection on diagonals") {
    rng::Rng r(23);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + static_cast<int>(r.below(4));
        Vector diag(d);
        for (int i = 0; i < d; ++i) diag[i] = r.uniform(0.0, 3.0);
        const double radius = r.uniform(0.1, 2.0);
        const Matrix projected =
            prox::project_nuclear_ball(Matrix(diag.asDiagonal()), Matrix::Zero(d, d), radius);
        const Vector expected =
            prox::project_l1_ball(diag, Vector::Zero(d), radius);
        CHECK((projected.diagonal() - expected).lpNorm<Eigen::Infinity>() <= 1e-9);
        Matrix off = projected;
        off.diagonal().setZero();
        CHECK(off.cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("projection properties: feasibility, idempotence, non-expansiveness") {
    rng::Rng r(31);
    const double tol = prox::kFeasibilityTol;
    for (int trial = 0; trial < 500; ++trial) {
        const int d = 2 + static_cast<int>(r.below(10));
        const Vector center = random_vector(r, d, 0.5);
        const double radius = r.uniform(0.01, 2.0);

        const Vector u = random_vector(r, d);
        const Vector v = random_vector(r, d);
        const Vector pu = prox::project_l1_ball(u, center, radius);
        const Vector pv = prox::project_l1_ball(v, center, radius);
        CHECK((pu - center).lpNorm<1>() <= radius * (1.0 + tol));
        CHECK((prox::project_l1_ball(pu, center, radius) - pu).lpNorm<Eigen::Infinity>() <=
              1e-12);
        CHECK((pu - pv).norm() <= (u - v).norm() * (1.0 + 1e-12));

        const Matrix mu_ = random_matrix(r, 3, 3);
        const Matrix mv = random_matrix(r, 3, 3);
        const double bound = r.uniform(0.0, 1.5);
        const Matrix bu = prox::project_linf_box(mu_, bound);
        const Matrix bv = prox::project_linf_box(mv, bound);
        CHECK(bu.cwiseAbs().maxCoeff() <= bound * (1.0 + tol));
        CHECK((prox::project_linf_box(bu, bound) - bu).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((bu - bv).norm() <= (mu_ - mv).norm() * (1.0 + 1e-12));

        const Matrix mcenter = random_matrix(r, 3, 3, 0.3);
        const Matrix nu_ = random_matrix(r, 3, 3);
        const Matrix nv = random_matrix(r, 3, 3);
        const double nradius = r.uniform(0.05, 2.0);
        const Matrix pnu = prox::project_nuclear_ball(nu_, mcenter, nradius);
        const Matrix pnv = prox::project_nuclear_ball(nv, mcenter, nradius);
        CHECK(prox::nuclear_norm(pnu - mcenter) <= nradius * (1.0 + 1e-9));
        CHECK((prox::project_nuclear_ball(pnu, mcenter, nradius) - pnu)
                  .cwiseAbs()
                  .maxCoeff() <= 1e-12);
        CHECK((pnu - pnv).norm() <= (nu_ - nv).norm() * (1.0 + 1e-9));

        const double kappa = r.uniform(0.0, 1.0);
        const Vector su = prox::shrink(u, kappa);
        CHECK((prox::shrink(su, 0.0) - su).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

}  // TEST_SUITE
