#include "reason/reason1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reason/projections.hpp"

namespace reason::r1 {

namespace {
constexpr double kBaselineRadius = 1e18;
constexpr double kFeasTol = 1e-10;
constexpr double kStationarityTol = 1e-10;
constexpr double kAveragingTol = 1e-12;
}  // namespace

void Reason1Config::validate() const {
    if (epoch_length < 1) throw ConfigError("reason1: epoch_length must be >= 1");
    if (num_epochs < 1) throw ConfigError("reason1: num_epochs must be >= 1");
    if (!(initial_radius > 0.0)) throw ConfigError("reason1: initial_radius must be positive");
    if (rho < 0.0 || rho_x < 0.0 || tau < 0.0) throw ConfigError("reason1: penalties must be nonnegative");
    if (rho_scale <= 0.0) throw ConfigError("reason1: rho_scale must be positive");
    if (schedule != LambdaSchedule::Theory && lambda1 < 0.0)
        throw ConfigError("reason1: lambda1 must be nonnegative");
    if (schedule == LambdaSchedule::Geometric &&
        (lambda_decay <= 0.0 || lambda_decay > 1.0))
        throw ConfigError("reason1: lambda_decay must lie in (0, 1]");
    if (variable_epochs && epoch_scale_c <= 0.0)
        throw ConfigError("reason1: epoch_scale_c must be positive");
    if (schedule == LambdaSchedule::Theory || variable_epochs) constants.validate();
}

void DebugStats::merge(const DebugStats& other) {
    iterations_checked += other.iterations_checked;
    feasibility_violations += other.feasibility_violations;
    dual_bound_violations += other.dual_bound_violations;
    stationarity_violations += other.stationarity_violations;
    averaging_violations += other.averaging_violations;
    max_feasibility_excess = std::max(max_feasibility_excess, other.max_feasibility_excess);
    max_dual_ratio = std::max(max_dual_ratio, other.max_dual_ratio);
    max_stationarity_residual = std::max(max_stationarity_residual, other.max_stationarity_residual);
    max_averaging_error = std::max(max_averaging_error, other.max_averaging_error);
}

ScheduleParams theory_schedule(const loss::ProblemConstants& constants, double dim,
                               int epoch_index, double radius, long epoch_length,
                               double rho_scale) {
    if (!(radius > 0.0)) throw std::invalid_argument("theory_schedule: radius must be positive");
    if (epoch_index < 1) throw std::invalid_argument("theory_schedule: epoch index starts at 1");
    if (epoch_length < 1) throw std::invalid_argument("theory_schedule: epoch length must be >= 1");
    if (dim <= 1.0) throw std::invalid_argument("theory_schedule: need dim > 1");
    constants.validate();

    const double log_d = std::log(dim);
    const double t0 = static_cast<double>(epoch_length);
    const double r2 = radius * radius;
    const double w_i2 = constants.w * constants.w + 24.0 * std::log(static_cast<double>(epoch_index));
    const double g2 = constants.lipschitz_g * constants.lipschitz_g;
    const double sigma2 = constants.sigma * constants.sigma;

    const double lambda_sq = constants.gamma / (constants.sparsity_s * std::sqrt(t0)) *
                             std::sqrt(r2 * log_d + g2 * r2 / t0 + sigma2 * r2 * w_i2);

    ScheduleParams out;
    out.lambda = std::sqrt(lambda_sq);
    out.rho = rho_scale * std::sqrt(t0 * log_d) / radius;
    out.tau = out.rho;
    return out;
}

long variable_epoch_length(const loss::ProblemConstants& constants, double dim,
                           int epoch_index, double radius, double scale_c) {
    if (!(radius > 0.0)) throw std::invalid_argument("variable_epoch_length: radius must be positive");
    const double log_d = std::log(dim);
    const double w_i2 = constants.w * constants.w + 24.0 * std::log(static_cast<double>(epoch_index));
    const double s_over_gamma = constants.sparsity_s / constants.gamma;
    const double t = scale_c * s_over_gamma * s_over_gamma *
                     (log_d + constants.sigma * constants.sigma * w_i2) / (radius * radius);
    return std::max<long>(1, static_cast<long>(std::llround(t)));
}

Vector theta_update(const Reason1State& state, const Vector& grad, double rho,
                    double rho_x) {
    if (!(rho + rho_x > 0.0)) throw std::invalid_argument("theta_update: rho + rho_x must be positive");
    if (!grad.allFinite()) throw std::invalid_argument("theta_update: non-finite gradient");
    const Vector unconstrained =
        (rho * state.y + rho_x * state.theta + state.z - grad) / (rho + rho_x);
    if (!unconstrained.allFinite())
        throw std::runtime_error("theta_update: non-finite intermediate");
    return prox::project_l1_ball(unconstrained, state.prox_center, state.radius);
}

Vector y_update(const Vector& theta_next, const Vector& z, double lambda, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("y_update: rho must be positive");
    return prox::shrink(Vector(theta_next - z / rho), lambda / rho);
}

Vector z_update(const Vector& z, const Vector& theta_next, const Vector& y_next,
                double tau) {
    return z - tau * (theta_next - y_next);
}

Vector run_epoch(Reason1State& state, loss::VectorGradOracle& oracle,
                 const Reason1Config& cfg, const EpochSetting& setting,
                 DebugStats* debug, const Recorder& recorder) {
    const double rho = setting.params.rho;
    const double rho_x = cfg.rho_x;
    const double tau = setting.params.tau;
    const double lambda = setting.params.lambda;

    state.theta = state.prox_center;
    state.y = state.prox_center;
    state.z = Vector::Zero(state.prox_center.size());
    state.running_sum = Vector::Zero(state.prox_center.size());
    state.sum_count = 0;

    std::vector<Vector> kept;  // iterates retained for the averaging identity
    if (debug) kept.reserve(static_cast<std::size_t>(setting.length));

    const double dual_g = cfg.debug_dual_g > 0.0 ? cfg.debug_dual_g : cfg.constants.lipschitz_g;
    const double dual_bound = dual_g + 2.0 * (rho_x + rho) * state.radius;

    for (long k = 0; k < setting.length; ++k) {
        if (cfg.include_start_in_average) {
            state.running_sum += state.theta;
            ++state.sum_count;
            if (debug) kept.push_back(state.theta);
        }

        const Vector grad = oracle.gradient(state.theta);
        const Vector unconstrained =
            (rho * state.y + rho_x * state.theta + state.z - grad) / (rho + rho_x);
        if (!unconstrained.allFinite())
            throw std::runtime_error("reason1: non-finite iterate at global step " +
                                     std::to_string(state.iter_index + 1));

        if (debug) {
            // Optimality of the unconstrained step before projection.
            const Vector residual = grad - state.z + rho * (unconstrained - state.y) +
                                    rho_x * (unconstrained - state.theta);
            const double res = residual.lpNorm<Eigen::Infinity>();
            debug->max_stationarity_residual = std::max(debug->max_stationarity_residual, res);
            if (res > kStationarityTol) ++debug->stationarity_violations;
        }

        const Vector theta_next =
            prox::project_l1_ball(unconstrained, state.prox_center, state.radius);
        const Vector y_next = y_update(theta_next, state.z, lambda, rho);
        const Vector z_next = z_update(state.z, theta_next, y_next, tau);

        if (debug) {
            ++debug->iterations_checked;
            const double dist = (theta_next - state.prox_center).lpNorm<1>();
            const double excess = state.radius > 0.0 ? dist / state.radius - 1.0 : dist;
            debug->max_feasibility_excess = std::max(debug->max_feasibility_excess, excess);
            if (dist > state.radius * (1.0 + kFeasTol)) ++debug->feasibility_violations;

            const double znorm = z_next.lpNorm<1>();
            debug->max_dual_ratio = std::max(debug->max_dual_ratio, znorm / dual_bound);
            if (znorm > dual_bound * (1.0 + kFeasTol)) ++debug->dual_bound_violations;
        }

        state.theta = theta_next;
        state.y = y_next;
        state.z = z_next;
        ++state.iter_index;

        if (!cfg.include_start_in_average) {
            state.running_sum += state.theta;
            ++state.sum_count;
            if (debug) kept.push_back(state.theta);
        }

        if (recorder) {
            recorder(IterationView{state.iter_index, state.epoch_index, state.theta,
                                   state.radius, lambda});
        }
    }

    const Vector average = state.running_sum / static_cast<double>(state.sum_count);

    if (debug && !kept.empty()) {
        Vector mean = Vector::Zero(average.size());
        for (const Vector& it : kept) mean += it;
        mean /= static_cast<double>(kept.size());
        const double err = (mean - average).lpNorm<Eigen::Infinity>();
        debug->max_averaging_error = std::max(debug->max_averaging_error, err);
        if (err > kAveragingTol) ++debug->averaging_violations;
    }

    state.prox_center = average;
    state.radius = std::sqrt(state.radius * state.radius / 2.0);
    ++state.epoch_index;
    return average;
}

Reason1Result reason1_solve(const Reason1Problem& problem,
                            loss::VectorGradOracle& oracle, const Reason1Config& cfg,
                            const Recorder& recorder) {
    cfg.validate();
    if (problem.dim < 1) throw ConfigError("reason1: problem dimension must be positive");

    Reason1State state;
    state.prox_center = problem.initial_center.size() > 0
                            ? problem.initial_center
                            : Vector::Zero(problem.dim);
    if (state.prox_center.size() != problem.dim)
        throw ConfigError("reason1: initial center has wrong dimension");
    state.radius = cfg.baseline_mode ? kBaselineRadius : cfg.initial_radius;

    const long budget = cfg.sample_budget >= 0
                            ? cfg.sample_budget
                            : static_cast<long>(cfg.num_epochs) * cfg.epoch_length;

    Reason1Result result;
    result.debug = DebugStats{};

    // ST-ADMM: one epoch over the whole budget, unprojected, parameters
    // frozen at their epoch-1 values so the inner loop matches the
    // projected run exactly.
    const int epochs = cfg.baseline_mode ? 1 : cfg.num_epochs;

    double lambda_prev = std::numeric_limits<double>::infinity();
    long used = 0;
    for (int i = 1; i <= epochs; ++i) {
        EpochSetting setting;
        if (cfg.variable_epochs && !cfg.baseline_mode) {
            setting.length = variable_epoch_length(cfg.constants, problem.dim, i,
                                                   state.radius, cfg.epoch_scale_c);
        } else {
            setting.length = cfg.baseline_mode ? budget : cfg.epoch_length;
        }
        if (used + setting.length > budget) setting.length = budget - used;  // truncate
        if (setting.length <= 0) break;

        const double schedule_radius = cfg.baseline_mode ? cfg.initial_radius : state.radius;
        const int schedule_epoch = cfg.baseline_mode ? 1 : i;
        const long schedule_len = cfg.baseline_mode ? cfg.epoch_length : setting.length;
        switch (cfg.schedule) {
            case LambdaSchedule::Theory: {
                setting.params = theory_schedule(cfg.constants, problem.dim, schedule_epoch,
                                                 schedule_radius, schedule_len, cfg.rho_scale);
                // The epoch-carryover analysis assumes lambda never grows.
                setting.params.lambda = std::min(setting.params.lambda, lambda_prev);
                break;
            }
            case LambdaSchedule::Geometric:
                setting.params.lambda =
                    cfg.lambda1 * std::pow(cfg.lambda_decay, schedule_epoch - 1);
                break;
            case LambdaSchedule::Fixed:
                setting.params.lambda = cfg.lambda1;
                break;
        }
        if (cfg.rho > 0.0) {
            setting.params.rho = cfg.rho;
        } else if (cfg.schedule != LambdaSchedule::Theory) {
            // The rho formula needs no problem constants; reuse it.
            setting.params.rho =
                cfg.rho_scale *
                std::sqrt(static_cast<double>(schedule_len) * std::log(double(problem.dim))) /
                schedule_radius;
        }
        setting.params.tau = cfg.tau > 0.0 ? cfg.tau : setting.params.rho;
        lambda_prev = setting.params.lambda;

        DebugStats epoch_debug;
        const Vector average = run_epoch(state, oracle, cfg, setting,
                                         cfg.debug_checks ? &epoch_debug : nullptr, recorder);
        if (cfg.debug_checks) result.debug.merge(epoch_debug);

        result.epoch_averages.push_back(average);
        result.epoch_settings.push_back(setting);
        ++result.epochs_completed;
        used += setting.length;
        if (used >= budget) break;
    }

    result.total_iterations = used;
    if (result.epoch_averages.empty())
        throw std::runtime_error("reason1: no epochs were run");
    result.theta_hat = result.epoch_averages.back();
    return result;
}

}  // namespace reason::r1
