#pragma once

#include <functional>
#include <vector>

#include "reason/losses.hpp"
#include "reason/schedule.hpp"
#include "reason/types.hpp"

namespace reason::r1 {

/// Epoch-based inexact stochastic ADMM for l1-regularized problems.
/// Within each epoch the iterate is confined to an l1 ball around the
/// epoch's prox center; the center moves to the epoch average and the
/// squared radius halves between epochs. baseline_mode degenerates the
/// solver to single-epoch, unprojected, fixed-lambda ST-ADMM.

struct Reason1Config {
    int epoch_length = 2000;  // T0
    int num_epochs = 5;       // kT
    double initial_radius = 1.0;

    LambdaSchedule schedule = LambdaSchedule::Theory;
    double lambda1 = 0.1;                       // geometric start / fixed value
    double lambda_decay = 0.70710678118654752;  // 2^(-1/2): lambda_i tracks R_i

    double rho = 0.0;        // explicit penalty; 0 selects the theory formula
    double rho_scale = 1.0;  // proportionality constant in the theory rho
    double rho_x = 1.0;
    double tau = 0.0;  // explicit dual step; 0 selects tau = rho

    bool baseline_mode = false;

    // Variable-length epochs: T_i grows as the radius shrinks, truncated
    // once the sample budget is spent.
    bool variable_epochs = false;
    double epoch_scale_c = 1.0;  // C in the epoch-length rule
    long sample_budget = -1;     // < 0 means num_epochs * epoch_length

    // Average iterates k = 1..T0 by default; the flag adds the epoch's
    // starting point instead of the last iterate, matching the pseudocode
    // indexing k = 0..T0-1.
    bool include_start_in_average = false;

    loss::ProblemConstants constants;

    // Per-iteration invariant checking (feasibility, dual bound,
    // stationarity, averaging identity).
    bool debug_checks = false;
    double debug_dual_g = -1.0;  // l1 gradient bound; < 0 uses constants.lipschitz_g

    void validate() const;
};

struct Reason1State {
    Vector theta;
    Vector y;
    Vector z;
    Vector prox_center;  // theta-tilde_i
    double radius = 0.0;
    int epoch_index = 1;
    long iter_index = 0;  // global, across epochs
    Vector running_sum;
    long sum_count = 0;
};

struct ScheduleParams {
    double lambda = 0.0;
    double rho = 0.0;
    double tau = 0.0;
};

/// The analysis parameter choice:
///   lambda_i^2 = gamma/(s sqrt(T0)) * sqrt(R^2 log d + G^2 R^2/T0
///                                          + sigma^2 R^2 w_i^2),
///   rho = rho_scale * sqrt(T0 log d)/R,   tau = rho,
/// with w_i^2 = w^2 + 24 log i. `dim` may be fractional (only log(dim)
/// enters).
ScheduleParams theory_schedule(const loss::ProblemConstants& constants, double dim,
                               int epoch_index, double radius, long epoch_length,
                               double rho_scale = 1.0);

/// Epoch length for variable-epoch mode:
///   T_i = C (s/gamma)^2 (log d + sigma^2 w_i^2) / R_i^2.
long variable_epoch_length(const loss::ProblemConstants& constants, double dim,
                           int epoch_index, double radius, double scale_c);

/// Ball projection of the unconstrained minimizer of the linearized
/// augmented Lagrangian:
///   theta_u = (rho y + rho_x theta + z - grad) / (rho + rho_x).
Vector theta_update(const Reason1State& state, const Vector& grad, double rho,
                    double rho_x);

/// shrink(theta_next - z/rho, lambda/rho).
Vector y_update(const Vector& theta_next, const Vector& z, double lambda,
                double rho);

/// z - tau (theta_next - y_next).
Vector z_update(const Vector& z, const Vector& theta_next, const Vector& y_next,
                double tau);

struct DebugStats {
    long iterations_checked = 0;
    long feasibility_violations = 0;
    long dual_bound_violations = 0;
    long stationarity_violations = 0;
    long averaging_violations = 0;
    double max_feasibility_excess = 0.0;  // relative slack beyond R_i
    double max_dual_ratio = 0.0;          // |z|_1 over its bound
    double max_stationarity_residual = 0.0;
    double max_averaging_error = 0.0;

    long total_violations() const {
        return feasibility_violations + dual_bound_violations +
               stationarity_violations + averaging_violations;
    }
    void merge(const DebugStats& other);
};

/// Per-iteration view handed to trajectory recorders (post-update iterate).
struct IterationView {
    long iter = 0;  // global, 1-based
    int epoch = 1;
    const Vector& theta;
    double radius = 0.0;
    double lambda = 0.0;
};
using Recorder = std::function<void(const IterationView&)>;

struct EpochSetting {
    long length = 0;
    ScheduleParams params;
};

/// Runs one epoch: initializes theta = y = prox center and z = 0, performs
/// `setting.length` iterations of (theta, y, z) updates, moves the prox
/// center to the iterate average and halves the squared radius. Returns the
/// epoch average.
Vector run_epoch(Reason1State& state, loss::VectorGradOracle& oracle,
                 const Reason1Config& cfg, const EpochSetting& setting,
                 DebugStats* debug = nullptr, const Recorder& recorder = nullptr);

struct Reason1Problem {
    int dim = 0;
    Vector initial_center;  // theta-tilde_1; zero vector if empty
};

struct Reason1Result {
    Vector theta_hat;  // last-epoch average
    std::vector<Vector> epoch_averages;
    std::vector<EpochSetting> epoch_settings;
    int epochs_completed = 0;
    long total_iterations = 0;
    DebugStats debug;
};

Reason1Result reason1_solve(const Reason1Problem& problem,
                            loss::VectorGradOracle& oracle,
                            const Reason1Config& cfg,
                            const Recorder& recorder = nullptr);

}  // namespace reason::r1
