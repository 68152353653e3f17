#pragma once

#include <functional>
#include <vector>

#include "reason/losses.hpp"
#include "reason/schedule.hpp"
#include "reason/types.hpp"

namespace reason::r2 {

/// Epoch-based multi-block inexact stochastic ADMM for sparse + low-rank
/// decomposition M = S + L. Per iteration: closed-form M step (or M <- X
/// in direct-observation mode), projected-subgradient S step inside an l1
/// ball, singular-value shrinkage L step inside a nuclear ball, box-clamped
/// Y step, and periodic dual updates for Z and U. baseline_mode removes the
/// epoch machinery (single epoch, radii 1e18, fixed lambda and mu).

struct Reason2Config {
    int epoch_length = 2000;  // T0
    int num_epochs = 5;       // kT
    double initial_radius = 1.0;  // R1 for the S ball
    double radius_ratio = 1.0;    // c_r in (0, 1]; nuclear radius = c_r * R1

    LambdaSchedule schedule = LambdaSchedule::Theory;
    double lambda1 = 0.1;
    double lambda_decay = 0.70710678118654752;
    double mu_ratio = 1.0;  // c_mu: mu_i^2 = c_mu * lambda_i^2

    double rho = 0.0;
    double rho_scale = 1.0;
    double rho_x = 1.0;
    double tau = 0.0;  // 0 selects tau = rho

    // Inner proximal step for the decoupled S/L updates. The joint prox
    // step on W = [S; L] with A = [I, I] is contractive only for
    // tau_k <= 1/lambda_max(A^T A) = 1/2.
    double tau_k = 0.5;
    int inner_iters = 20;          // t_s
    double inner_exit_tol = 1e-9;  // early exit on successive iterates

    double alpha = 1.0;          // spikiness: |Y|_inf <= alpha/p
    int dual_update_period = 4;  // m; duals updated every m-th iteration
    bool direct_observation = false;
    double m_l1_radius = 0.0;  // optional l1 ball on M around the centers; 0 = off

    bool baseline_mode = false;
    bool include_start_in_average = false;
    bool appendix_rhox_term = false;  // lambda^2 variant: rho_x (R^2+Rt^2)/T0

    loss::ProblemConstants constants;

    bool debug_checks = false;
    double debug_dual_g = -1.0;

    void validate() const;
};

struct Reason2State {
    Matrix m, s, l, y;  // primal blocks
    Matrix z, u;        // duals
    Matrix s_center, l_center;
    double radius_s = 0.0;  // R_i
    double radius_l = 0.0;  // R-tilde_i
    int epoch_index = 1;
    long iter_index = 0;
    Matrix s_sum, l_sum;
    long sum_count = 0;
};

struct Schedule2Params {
    double lambda = 0.0;
    double mu = 0.0;
    double rho = 0.0;
    double tau = 0.0;
};

/// The analysis parameter choice for the decomposition solver, with
/// mu_i^2 = c_mu lambda_i^2 and rho = rho_scale sqrt(T0 log p/(R^2+Rt^2)).
Schedule2Params theory_schedule2(const loss::ProblemConstants& constants, double p,
                                 int epoch_index, double radius_s, double radius_l,
                                 long epoch_length, double mu_ratio,
                                 double rho_x, double rho_scale = 1.0,
                                 bool appendix_rhox_term = false);

/// Closed-form M step:
///   M = (-grad + Z + rho (S + L) + rho_x M) / (rho + rho_x);
/// in direct-observation mode returns the sample itself; with m_l1_radius
/// set, additionally projects onto {|M - S~ - L~|_1 <= R-breve}.
Matrix m_update(const Reason2State& state, const Matrix& grad_or_sample,
                const Reason2Config& cfg, double rho);

/// G_M = M_next - S - L - Z/rho.
Matrix g_m(const Matrix& m_next, const Matrix& s, const Matrix& l, const Matrix& z,
           double rho);

/// Approximately solves
///   min lambda |S|_1 + rho/(2 tau_k) |S - (S_k + tau_k G)|_F^2
///   s.t. |S - center|_1 <= radius
/// by projected subgradient steps with eta_t = (tau_k/rho)/sqrt(t).
Matrix s_update(const Matrix& s, const Matrix& g, const Matrix& center,
                double radius, double lambda, double rho, double tau_k,
                int inner_iters, double exit_tol);

/// Singular-value shrinkage of (Y + U/rho) by mu/rho.
Matrix nuclear_prox(const Matrix& target, double kappa);

/// nuclear_prox(Y + U/rho, mu/rho) projected onto the nuclear ball.
Matrix l_update(const Matrix& y, const Matrix& u, const Matrix& center,
                double radius, double mu, double rho);

/// Weighted average of the two quadratic centers, clamped to the box:
///   Y = clamp((a + tau_k b)/(1 + tau_k)), a = L_k + tau_k G,
///   b = L_next - U/rho.
Matrix y_update(const Matrix& l_old, const Matrix& l_next, const Matrix& u,
                const Matrix& g, double tau_k, double rho, double box_bound);

/// Z -= tau (M - S - L); U -= tau (L - Y). Applied only when
/// iteration_in_epoch (1-based) is a multiple of the update period.
void dual_updates(Matrix& z, Matrix& u, const Matrix& m_next, const Matrix& s_next,
                  const Matrix& l_next, const Matrix& y_next, double tau,
                  int period, long iteration_in_epoch);

/// Continue halving while R_i^2 > 2 (s + r + (s+r)^2/(p gamma^2)) alpha^2/p;
/// at or below the threshold the radius has reached the approximation-error
/// floor and the solver stops.
bool check_stop(double radius_s_squared, const loss::ProblemConstants& constants,
                int p);

struct DebugStats2 {
    long iterations_checked = 0;
    long s_feasibility_violations = 0;
    long l_feasibility_violations = 0;
    long y_box_violations = 0;
    long dual_bound_violations = 0;
    long stationarity_violations = 0;
    long decoupling_violations = 0;
    long shrinkage_violations = 0;
    long averaging_violations = 0;
    double max_stationarity_residual = 0.0;
    double max_dual_ratio = 0.0;
    double max_decoupling_error = 0.0;
    double max_shrinkage_error = 0.0;
    double max_averaging_error = 0.0;

    long total_violations() const {
        return s_feasibility_violations + l_feasibility_violations + y_box_violations +
               dual_bound_violations + stationarity_violations + decoupling_violations +
               shrinkage_violations + averaging_violations;
    }
    void merge(const DebugStats2& other);
};

struct IterationView2 {
    long iter = 0;
    int epoch = 1;
    const Matrix& s;
    const Matrix& l;
    const Matrix& m;
    double radius_s = 0.0;
};
using Recorder2 = std::function<void(const IterationView2&)>;

struct Epoch2Setting {
    long length = 0;
    Schedule2Params params;
};

struct Epoch2Result {
    Matrix s_mean;
    Matrix l_mean;
    bool stop = false;  // approximation-error floor reached
};

/// One epoch of the multi-block solver. Initializes S = S~, L = L~,
/// M = S + L, Y = clamp(L~), Z = U = 0; returns the epoch means (the next
/// prox centers) and halves both squared radii unless the stopping rule
/// fires.
Epoch2Result run_epoch2(Reason2State& state, loss::MatrixGradOracle& oracle,
                        const Reason2Config& cfg, const Epoch2Setting& setting,
                        DebugStats2* debug = nullptr,
                        const Recorder2& recorder = nullptr);

struct Reason2Problem {
    int p = 0;
    Matrix s_center0;  // S~_1; zero if empty
    Matrix l_center0;  // L~_1; zero if empty
};

struct Reason2Result {
    Matrix s_hat;
    Matrix l_hat;
    std::vector<Epoch2Setting> epoch_settings;
    int epochs_completed = 0;
    long total_iterations = 0;
    bool stopped_early = false;
    DebugStats2 debug;
};

Reason2Result reason2_solve(const Reason2Problem& problem,
                            loss::MatrixGradOracle& oracle,
                            const Reason2Config& cfg,
                            const Recorder2& recorder = nullptr);

}  // namespace reason::r2
