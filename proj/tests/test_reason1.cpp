#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "reason/datagen.hpp"
#include "reason/oracles.hpp"
#include "reason/projections.hpp"
#include "reason/reason1.hpp"
#include "reason/rng.hpp"

using namespace reason;
using r1::Reason1Config;
using r1::Reason1Problem;
using r1::Reason1State;

namespace {

// Oracle over a fixed gradient sequence, for exercising the solver loop
// without a data model.
class FixedGradOracle final : public loss::VectorGradOracle {
  public:
    FixedGradOracle(Vector grad, int dim) : grad_(std::move(grad)), dim_(dim) {}
    Vector gradient(const Vector&) override {
        ++used_;
        return grad_.size() > 0 ? grad_ : Vector::Zero(dim_);
    }
    long samples_used() const override { return used_; }

  private:
    Vector grad_;
    int dim_;
    long used_ = 0;
};

Reason1State make_state(int d, double radius) {
    Reason1State s;
    s.theta = Vector::Zero(d);
    s.y = Vector::Zero(d);
    s.z = Vector::Zero(d);
    s.prox_center = Vector::Zero(d);
    s.radius = radius;
    return s;
}

}  // namespace

TEST_SUITE("reason1") {

TEST_CASE("theta update closed form and projection") {
    auto state = make_state(1, 10.0);

    // Stationary at zero input.
    Vector grad = Vector::Zero(1);
    CHECK(r1::theta_update(state, grad, 1.0, 0.0)[0] == 0.0);

    // One-dimensional quadratic minimizer.
    grad << 1.0;
    CHECK(r1::theta_update(state, grad, 1.0, 0.0)[0] == doctest::Approx(-1.0));

    // Clipped by the ball.
    state.radius = 0.5;
    CHECK(r1::theta_update(state, grad, 1.0, 0.0)[0] == doctest::Approx(-0.5));

    CHECK_THROWS_AS(r1::theta_update(state, grad, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("theta update stationarity before projection") {
    rng::Rng r(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 5;
        auto state = make_state(d, 1e9);
        for (int i = 0; i < d; ++i) {
            state.theta[i] = r.uniform(-1.0, 1.0);
            state.y[i] = r.uniform(-1.0, 1.0);
            state.z[i] = r.uniform(-1.0, 1.0);
        }
        Vector grad(d);
        for (int i = 0; i < d; ++i) grad[i] = r.uniform(-2.0, 2.0);
        const double rho = r.uniform(0.5, 3.0);
        const double rho_x = r.uniform(0.0, 2.0);
        const Vector theta_next = r1::theta_update(state, grad, rho, rho_x);
        // With an effectively infinite ball the update is the unconstrained
        // minimizer, so the optimality residual vanishes.
        const Vector residual = grad - state.z + rho * (theta_next - state.y) +
                                rho_x * (theta_next - state.theta);
        CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("y update is shrinkage") {
    Vector theta(1), z(1);
    theta << 3.0;
    z << 0.0;
    CHECK(r1::y_update(theta, z, 1.0, 1.0)[0] == doctest::Approx(2.0));

    // Zero threshold passes the argument through.
    rng::Rng r(5);
    Vector t(4), zz(4);
    for (int i = 0; i < 4; ++i) {
        t[i] = r.uniform(-2.0, 2.0);
        zz[i] = r.uniform(-2.0, 2.0);
    }
    const Vector expected = t - zz / 2.0;
    CHECK((r1::y_update(t, zz, 0.0, 2.0) - expected).lpNorm<Eigen::Infinity>() <= 1e-15);

    // Everything below the threshold maps to zero.
    Vector small(2);
    small << 0.3, -0.2;
    CHECK(r1::y_update(small, Vector::Zero(2), 1.0, 1.0).lpNorm<1>() == 0.0);

    CHECK_THROWS_AS(r1::y_update(theta, z, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("z update recurrence and telescoping") {
    Vector z = Vector::Zero(2);
    Vector theta(2), y(2);
    theta << 1.0, 0.0;
    y << 0.0, 1.0;
    const Vector z1 = r1::z_update(z, theta, y, 1.0);
    CHECK(z1[0] == doctest::Approx(-1.0));
    CHECK(z1[1] == doctest::Approx(1.0));

    // Consensus leaves the dual unchanged.
    CHECK((r1::z_update(z1, theta, theta, 2.0) - z1).lpNorm<Eigen::Infinity>() == 0.0);

    // Telescoping: z_K = -tau sum_k (theta_k - y_k) from z_0 = 0.
    rng::Rng r(7);
    const double tau = 0.7;
    Vector zk = Vector::Zero(3);
    Vector running = Vector::Zero(3);
    for (int k = 0; k < 50; ++k) {
        Vector tk(3), yk(3);
        for (int i = 0; i < 3; ++i) {
            tk[i] = r.uniform(-1.0, 1.0);
            yk[i] = r.uniform(-1.0, 1.0);
        }
        running += tk - yk;
        zk = r1::z_update(zk, tk, yk, tau);
    }
    CHECK((zk + tau * running).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("theory schedule formulas") {
    loss::ProblemConstants ones;
    ones.gamma = ones.sigma = ones.lipschitz_g = ones.beta_p = ones.alpha = 1.0;
    ones.w = 1.0;
    ones.sparsity_s = 1;

    // Plug-in arithmetic: all constants 1, R = 1, T0 = 1, log d = 1, i = 1
    // gives lambda^2 = sqrt(3).
    const auto params = r1::theory_schedule(ones, std::exp(1.0), 1, 1.0, 1);
    CHECK(params.lambda * params.lambda == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(params.tau == params.rho);

    // rho doubles when the radius halves at fixed T0.
    const auto a = r1::theory_schedule(ones, 100.0, 1, 1.0, 50);
    const auto b = r1::theory_schedule(ones, 100.0, 1, 0.5, 50);
    CHECK(b.rho == doctest::Approx(2.0 * a.rho).epsilon(1e-12));

    CHECK_THROWS_AS(r1::theory_schedule(ones, 100.0, 1, 0.0, 50), std::invalid_argument);
}

TEST_CASE("theory schedule lambda is nonincreasing for decreasing radii") {
    // Numeric sweep with constants for which the w_i growth never outruns
    // the radius decay.
    loss::ProblemConstants c;
    c.gamma = 1.0;
    c.sigma = 1.0;
    c.lipschitz_g = 1.0;
    c.w = 5.0;
    c.sparsity_s = 3;
    double radius = 2.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 20; ++i) {
        const auto params = r1::theory_schedule(c, 2000.0, i, radius, 2000);
        CHECK(params.lambda <= prev * (1.0 + 1e-12));
        prev = params.lambda;
        radius /= std::sqrt(2.0);
    }
}

TEST_CASE("run_epoch fixed point and radius halving") {
    Reason1Config cfg;
    cfg.epoch_length = 16;
    cfg.num_epochs = 3;
    cfg.initial_radius = 1.0;
    cfg.schedule = LambdaSchedule::Fixed;
    cfg.lambda1 = 0.1;
    cfg.rho = 1.0;

    FixedGradOracle oracle(Vector(), 4);
    Reason1Problem problem{4, Vector::Zero(4)};
    const auto result = r1::reason1_solve(problem, oracle, cfg);

    // Zero gradients from zero initialization: everything stays zero.
    CHECK(result.theta_hat.lpNorm<1>() == 0.0);
    CHECK(result.epochs_completed == 3);
    CHECK(oracle.samples_used() == 48);

    // Squared radius halves per epoch: 1 -> 0.5 -> 0.25 -> 0.125.
    Reason1State state = make_state(4, 1.0);
    r1::EpochSetting setting;
    setting.length = 4;
    setting.params = {0.1, 1.0, 1.0};
    FixedGradOracle zero(Vector(), 4);
    for (double expected_sq : {0.5, 0.25, 0.125}) {
        r1::run_epoch(state, zero, cfg, setting);
        CHECK(state.radius * state.radius == doctest::Approx(expected_sq).epsilon(1e-12));
    }
}

TEST_CASE("epoch average matches batch lasso on noiseless data") {
    // d = 2 noiseless least squares with a generous ball: the epoch average
    // approaches the batch lasso solution over the same sample stream,
    // computed independently by proximal gradient.
    const int d = 2;
    const int t0 = 20000;
    const double lambda = 0.01;
    auto stream = datagen::gen_sparse_regression(d, 1, 1.0, 0.0, 17);
    // theta* has one +-1 spike; aim for (1, 0)-like ground truth.
    const Vector theta_star = stream.instance().theta_star;

    Reason1Config cfg;
    cfg.epoch_length = t0;
    cfg.num_epochs = 1;
    cfg.initial_radius = 10.0;
    cfg.schedule = LambdaSchedule::Fixed;
    cfg.lambda1 = lambda;
    cfg.rho = 60.0;

    loss::LeastSquaresOracle oracle(stream.clone_at(0));
    Reason1Problem problem{d, Vector::Zero(d)};
    const auto result = r1::reason1_solve(problem, oracle, cfg);

    std::vector<Vector> xs;
    std::vector<double> ys;
    auto replay = stream.clone_at(0);
    for (int k = 0; k < t0; ++k) {
        const auto sample = replay.next();
        xs.push_back(sample.x);
        ys.push_back(sample.y);
    }
    const Vector lasso = testing::batch_lasso(xs, ys, lambda, 1e-12);
    CHECK((lasso - theta_star).lpNorm<Eigen::Infinity>() <= 0.1);  // sanity
    CHECK((result.theta_hat - lasso).norm() <= 1e-3);
}

TEST_CASE("zero-noise run recovers the support exactly") {
    const int d = 20;
    auto stream = datagen::gen_sparse_regression(d, 1, 1.0, 0.0, 23);
    const Vector theta_star = stream.instance().theta_star;

    Reason1Config cfg;
    cfg.epoch_length = 2000;
    cfg.num_epochs = 5;
    cfg.initial_radius = 1.1;
    cfg.schedule = LambdaSchedule::Geometric;
    cfg.lambda1 = 0.05;
    cfg.lambda_decay = 0.5;
    cfg.rho = d * 1.0 / 18.0 * 20.0;  // stability-scaled for B = 1

    loss::LeastSquaresOracle oracle(stream.clone_at(0));
    Reason1Problem problem{d, Vector::Zero(d)};
    const auto result = r1::reason1_solve(problem, oracle, cfg);

    for (int j = 0; j < d; ++j) {
        if (theta_star[j] != 0.0) CHECK(std::abs(result.theta_hat[j]) > 0.5);
        else CHECK(std::abs(result.theta_hat[j]) < 0.05);
    }
}

TEST_CASE("debug invariants hold on a live run") {
    const int d = 50;
    auto stream = datagen::gen_sparse_regression(d, 3, 1.0, 0.25, 31);
    Reason1Config cfg;
    cfg.epoch_length = 500;
    cfg.num_epochs = 3;
    cfg.initial_radius = 1.1 * stream.instance().theta_star.lpNorm<1>();
    cfg.schedule = LambdaSchedule::Theory;
    cfg.constants = loss::least_squares_constants(1.0, cfg.initial_radius, 0.25, 3);
    cfg.debug_checks = true;
    cfg.debug_dual_g = d * 1.0 * (cfg.initial_radius + 5.0 * 0.5);

    loss::LeastSquaresOracle oracle(stream.clone_at(0));
    Reason1Problem problem{d, Vector::Zero(d)};
    const auto result = r1::reason1_solve(problem, oracle, cfg);
    CHECK(result.debug.iterations_checked == 1500);
    CHECK(result.debug.total_violations() == 0);
}

TEST_CASE("baseline mode is a single unprojected epoch") {
    const int d = 10;
    auto stream = datagen::gen_sparse_regression(d, 2, 1.0, 0.1, 37);
    Reason1Config cfg;
    cfg.epoch_length = 100;
    cfg.num_epochs = 4;
    cfg.schedule = LambdaSchedule::Fixed;
    cfg.lambda1 = 0.02;
    cfg.rho = 5.0;
    cfg.baseline_mode = true;

    loss::LeastSquaresOracle oracle(stream.clone_at(0));
    Reason1Problem problem{d, Vector::Zero(d)};
    const auto result = r1::reason1_solve(problem, oracle, cfg);
    CHECK(result.epochs_completed == 1);
    CHECK(result.total_iterations == 400);  // whole budget in one epoch
}

TEST_CASE("variable epoch lengths grow as the radius shrinks") {
    loss::ProblemConstants c;
    c.gamma = 0.5;
    c.sigma = 1.0;
    c.sparsity_s = 2;
    c.w = 2.0;
    const long t1 = r1::variable_epoch_length(c, 100.0, 1, 1.0, 1.0);
    const long t2 = r1::variable_epoch_length(c, 100.0, 2, 1.0 / std::sqrt(2.0), 1.0);
    CHECK(t2 > t1);

    // Budget truncation: epochs stop once the sample budget is spent.
    Reason1Config cfg;
    cfg.epoch_length = 100;
    cfg.num_epochs = 10;
    cfg.variable_epochs = true;
    cfg.epoch_scale_c = 1.0;
    cfg.sample_budget = 260;
    cfg.initial_radius = 1.0;
    cfg.schedule = LambdaSchedule::Theory;
    cfg.constants = c;
    auto stream = datagen::gen_sparse_regression(8, 2, 1.0, 0.1, 3);
    loss::LeastSquaresOracle oracle(stream.clone_at(0));
    Reason1Problem problem{8, Vector::Zero(8)};
    const auto result = r1::reason1_solve(problem, oracle, cfg);
    CHECK(result.total_iterations == 260);
    CHECK(oracle.samples_used() == 260);
}

TEST_CASE("identical seed and config give bit-identical trajectories") {
    const int d = 12;
    auto run = [&](std::uint64_t seed) {
        auto stream = datagen::gen_sparse_regression(d, 2, 1.0, 0.3, seed);
        Reason1Config cfg;
        cfg.epoch_length = 200;
        cfg.num_epochs = 2;
        cfg.initial_radius = 2.2;
        cfg.schedule = LambdaSchedule::Geometric;
        cfg.lambda1 = 0.05;
        cfg.rho = 4.0;
        loss::LeastSquaresOracle oracle(stream.clone_at(0));
        Reason1Problem problem{d, Vector::Zero(d)};
        std::vector<double> trace;
        const auto result = r1::reason1_solve(
            problem, oracle, cfg, [&](const r1::IterationView& it) {
                trace.push_back(it.theta.sum());
            });
        trace.push_back(result.theta_hat.norm());
        return trace;
    };
    const auto a = run(11);
    const auto b = run(11);
    const auto c = run(12);
    CHECK(a == b);  // bitwise equality
    CHECK(a != c);
}

TEST_CASE("oracle exhaustion surfaces as a stream error") {
    auto stream = datagen::gen_sparse_regression(6, 1, 1.0, 0.1, 5);
    datagen::SparseRegressionStream limited(stream.instance(), 5, 50);
    loss::LeastSquaresOracle oracle(std::move(limited));
    Reason1Config cfg;
    cfg.epoch_length = 100;
    cfg.num_epochs = 1;
    cfg.initial_radius = 1.5;
    cfg.schedule = LambdaSchedule::Fixed;
    cfg.lambda1 = 0.1;
    cfg.rho = 2.0;
    Reason1Problem problem{6, Vector::Zero(6)};
    CHECK_THROWS_AS(r1::reason1_solve(problem, oracle, cfg), StreamError);
}

}  // TEST_SUITE
