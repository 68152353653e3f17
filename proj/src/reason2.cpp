#include "reason/reason2.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "reason/projections.hpp"

namespace reason::r2 {

namespace {
constexpr double kBaselineRadius = 1e18;
constexpr double kFeasTol = 1e-10;
constexpr double kStationarityTol = 1e-10;
constexpr double kAveragingTol = 1e-12;
constexpr double kShrinkageTol = 1e-8;

Vector vectorize(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix devectorize(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace

void Reason2Config::validate() const {
    if (epoch_length < 1) throw ConfigError("reason2: epoch_length must be >= 1");
    if (num_epochs < 1) throw ConfigError("reason2: num_epochs must be >= 1");
    if (!(initial_radius > 0.0)) throw ConfigError("reason2: initial_radius must be positive");
    if (!(radius_ratio > 0.0) || radius_ratio > 1.0)
        throw ConfigError("reason2: radius_ratio must lie in (0, 1]");
    if (!(mu_ratio > 0.0)) throw ConfigError("reason2: mu_ratio must be positive");
    if (rho < 0.0 || rho_x < 0.0 || tau < 0.0) throw ConfigError("reason2: penalties must be nonnegative");
    if (rho_scale <= 0.0) throw ConfigError("reason2: rho_scale must be positive");
    if (!(tau_k > 0.0) || tau_k > 0.5)
        throw ConfigError("reason2: tau_k must lie in (0, 1/2]");
    if (inner_iters < 1) throw ConfigError("reason2: inner_iters must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("reason2: alpha must be positive");
    if (dual_update_period < 1) throw ConfigError("reason2: dual_update_period must be >= 1");
    if (m_l1_radius < 0.0) throw ConfigError("reason2: m_l1_radius must be nonnegative");
    if (schedule == LambdaSchedule::Geometric &&
        (lambda_decay <= 0.0 || lambda_decay > 1.0))
        throw ConfigError("reason2: lambda_decay must lie in (0, 1]");
    if (schedule == LambdaSchedule::Theory) constants.validate();
}

void DebugStats2::merge(const DebugStats2& other) {
    iterations_checked += other.iterations_checked;
    s_feasibility_violations += other.s_feasibility_violations;
    l_feasibility_violations += other.l_feasibility_violations;
    y_box_violations += other.y_box_violations;
    dual_bound_violations += other.dual_bound_violations;
    stationarity_violations += other.stationarity_violations;
    decoupling_violations += other.decoupling_violations;
    shrinkage_violations += other.shrinkage_violations;
    averaging_violations += other.averaging_violations;
    max_stationarity_residual = std::max(max_stationarity_residual, other.max_stationarity_residual);
    max_dual_ratio = std::max(max_dual_ratio, other.max_dual_ratio);
    max_decoupling_error = std::max(max_decoupling_error, other.max_decoupling_error);
    max_shrinkage_error = std::max(max_shrinkage_error, other.max_shrinkage_error);
    max_averaging_error = std::max(max_averaging_error, other.max_averaging_error);
}

Schedule2Params theory_schedule2(const loss::ProblemConstants& constants, double p,
                                 int epoch_index, double radius_s, double radius_l,
                                 long epoch_length, double mu_ratio, double rho_x,
                                 double rho_scale, bool appendix_rhox_term) {
    if (!(radius_s > 0.0) || !(radius_l > 0.0))
        throw std::invalid_argument("theory_schedule2: radii must be positive");
    if (epoch_index < 1) throw std::invalid_argument("theory_schedule2: epoch index starts at 1");
    if (p <= 1.0) throw std::invalid_argument("theory_schedule2: need p > 1");
    constants.validate();

    const double log_p = std::log(p);
    const double t0 = static_cast<double>(epoch_length);
    const double r_sum = radius_s * radius_s + radius_l * radius_l;
    const double w_i2 = constants.w * constants.w + 24.0 * std::log(static_cast<double>(epoch_index));
    const double g2 = constants.lipschitz_g * constants.lipschitz_g;
    const double beta2 = constants.beta_p * constants.beta_p;
    const double sigma2 = constants.sigma * constants.sigma;
    const double sr = constants.sparsity_s + constants.rank_r;

    double lambda_sq = constants.gamma * std::sqrt(r_sum) / (sr * std::sqrt(t0)) *
                       std::sqrt(log_p + g2 / t0 + beta2 * sigma2 * w_i2);
    lambda_sq += appendix_rhox_term ? rho_x * r_sum / t0 : rho_x * rho_x * r_sum / t0;
    lambda_sq += constants.alpha * constants.alpha / (p * p);
    lambda_sq += beta2 * sigma2 / t0 * (log_p + w_i2);

    Schedule2Params out;
    out.lambda = std::sqrt(lambda_sq);
    out.mu = std::sqrt(mu_ratio * lambda_sq);
    out.rho = rho_scale * std::sqrt(t0 * log_p / r_sum);
    out.tau = out.rho;
    return out;
}

Matrix m_update(const Reason2State& state, const Matrix& grad_or_sample,
                const Reason2Config& cfg, double rho) {
    if (!grad_or_sample.allFinite())
        throw std::runtime_error("m_update: non-finite gradient or sample");
    Matrix m_next;
    if (cfg.direct_observation) {
        m_next = grad_or_sample;
    } else {
        if (!(rho + cfg.rho_x > 0.0))
            throw std::invalid_argument("m_update: rho + rho_x must be positive");
        m_next = (-grad_or_sample + state.z + rho * (state.s + state.l) +
                  cfg.rho_x * state.m) /
                 (rho + cfg.rho_x);
    }
    if (cfg.m_l1_radius > 0.0) {
        const Matrix center = state.s_center + state.l_center;
        const Vector projected = prox::project_l1_ball(
            vectorize(m_next), vectorize(center), cfg.m_l1_radius);
        m_next = devectorize(projected, m_next.rows(), m_next.cols());
    }
    return m_next;
}

Matrix g_m(const Matrix& m_next, const Matrix& s, const Matrix& l, const Matrix& z,
           double rho) {
    return m_next - s - l - z / rho;
}

Matrix s_update(const Matrix& s, const Matrix& g, const Matrix& center,
                double radius, double lambda, double rho, double tau_k,
                int inner_iters, double exit_tol) {
    if (inner_iters < 1) throw std::invalid_argument("s_update: inner_iters must be >= 1");
    if (!(tau_k > 0.0)) throw std::invalid_argument("s_update: tau_k must be positive");
    if (radius == 0.0) return center;

    // Projected subgradient on the shifted variable W = vec(S - center)
    // with the ball centered at the origin; eta_t = (tau_k/rho)/sqrt(t)
    // makes the first step land on the proximal target when lambda = 0.
    const Vector center_vec = vectorize(center);
    const Vector target = vectorize(Matrix(s + tau_k * g)) - center_vec;
    Vector w = vectorize(s) - center_vec;
    const double curvature = rho / tau_k;
    const Vector zero_center = Vector::Zero(w.size());
    Vector candidate(w.size());

    for (int t = 1; t <= inner_iters; ++t) {
        const double eta = (tau_k / rho) / std::sqrt(static_cast<double>(t));
        candidate = w - eta * (lambda * (w + center_vec).array().sign().matrix() +
                               curvature * (w - target));
        if (candidate.lpNorm<1>() > radius)
            candidate = prox::project_l1_ball(candidate, zero_center, radius);
        const double move = (candidate - w).norm();
        w.swap(candidate);
        if (move < exit_tol) break;
    }
    return center + devectorize(w, s.rows(), s.cols());
}

Matrix nuclear_prox(const Matrix& target, double kappa) {
    Eigen::BDCSVD<Matrix> svd(target, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw std::runtime_error("nuclear_prox: SVD failed");
    const Vector shrunk = prox::shrink(svd.singularValues(), kappa);
    return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

Matrix l_update(const Matrix& y, const Matrix& u, const Matrix& center,
                double radius, double mu, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("l_update: rho must be positive");
    const Matrix proxed = nuclear_prox(y + u / rho, mu / rho);
    return prox::project_nuclear_ball(proxed, center, radius);
}

Matrix y_update(const Matrix& l_old, const Matrix& l_next, const Matrix& u,
                const Matrix& g, double tau_k, double rho, double box_bound) {
    const Matrix a = l_old + tau_k * g;
    const Matrix b = l_next - u / rho;
    const Matrix unconstrained = (a + tau_k * b) / (1.0 + tau_k);
    return prox::project_linf_box(unconstrained, box_bound);
}

void dual_updates(Matrix& z, Matrix& u, const Matrix& m_next, const Matrix& s_next,
                  const Matrix& l_next, const Matrix& y_next, double tau,
                  int period, long iteration_in_epoch) {
    if (period < 1) throw std::invalid_argument("dual_updates: period must be >= 1");
    if (iteration_in_epoch % period != 0) return;
    z -= tau * (m_next - (s_next + l_next));
    u -= tau * (l_next - y_next);
}

bool check_stop(double radius_s_squared, const loss::ProblemConstants& constants,
                int p) {
    const double sr = constants.sparsity_s + constants.rank_r;
    const double threshold =
        2.0 * (sr + sr * sr / (p * constants.gamma * constants.gamma)) *
        constants.alpha * constants.alpha / p;
    return radius_s_squared > threshold;
}

Epoch2Result run_epoch2(Reason2State& state, loss::MatrixGradOracle& oracle,
                        const Reason2Config& cfg, const Epoch2Setting& setting,
                        DebugStats2* debug, const Recorder2& recorder) {
    const double rho = setting.params.rho;
    const double tau = setting.params.tau;
    const double lambda = setting.params.lambda;
    const double mu = setting.params.mu;
    const int p = static_cast<int>(state.s_center.rows());
    const double box = cfg.alpha / p;

    state.s = state.s_center;
    state.l = state.l_center;
    state.m = state.s + state.l;
    state.y = prox::project_linf_box(state.l_center, box);
    state.z = Matrix::Zero(p, p);
    state.u = Matrix::Zero(p, p);
    state.s_sum = Matrix::Zero(p, p);
    state.l_sum = Matrix::Zero(p, p);
    state.sum_count = 0;

    std::vector<Matrix> kept_s, kept_l;
    if (debug) {
        kept_s.reserve(static_cast<std::size_t>(setting.length));
        kept_l.reserve(static_cast<std::size_t>(setting.length));
    }

    const double dual_g = cfg.debug_dual_g > 0.0 ? cfg.debug_dual_g : cfg.constants.lipschitz_g;
    const double dual_bound = dual_g + 2.0 * (cfg.rho_x + rho) * state.radius_s;

    for (long k = 1; k <= setting.length; ++k) {
        if (cfg.include_start_in_average) {
            state.s_sum += state.s;
            state.l_sum += state.l;
            ++state.sum_count;
            if (debug) {
                kept_s.push_back(state.s);
                kept_l.push_back(state.l);
            }
        }

        const Matrix grad = oracle.gradient(state.m);
        const Matrix m_next = m_update(state, grad, cfg, rho);

        if (debug && !cfg.direct_observation && cfg.m_l1_radius == 0.0) {
            const Matrix residual = grad - state.z + rho * (m_next - state.s - state.l) +
                                    cfg.rho_x * (m_next - state.m);
            const double res = linf_norm(residual);
            debug->max_stationarity_residual = std::max(debug->max_stationarity_residual, res);
            if (res > kStationarityTol) ++debug->stationarity_violations;
        }

        const Matrix g = g_m(m_next, state.s, state.l, state.z, rho);
        const Matrix s_next = s_update(state.s, g, state.s_center, state.radius_s,
                                       lambda, rho, cfg.tau_k, cfg.inner_iters,
                                       cfg.inner_exit_tol);
        const Matrix l_next =
            l_update(state.y, state.u, state.l_center, state.radius_l, mu, rho);
        const Matrix y_next = y_update(state.l, l_next, state.u, g, cfg.tau_k, rho, box);

        if (debug) {
            ++debug->iterations_checked;
            if (l1_norm(Matrix(s_next - state.s_center)) >
                state.radius_s * (1.0 + kFeasTol))
                ++debug->s_feasibility_violations;
            if (prox::nuclear_norm(l_next - state.l_center) >
                state.radius_l * (1.0 + kFeasTol))
                ++debug->l_feasibility_violations;
            if (linf_norm(y_next) > box * (1.0 + kFeasTol)) ++debug->y_box_violations;

            // Decoupling: the single proximal step on W = [S; L] with
            // A = [I, I] must reproduce the two separate proximal targets
            // and their unconstrained prox blocks.
            {
                Matrix w_stack(2 * p, p);
                w_stack.topRows(p) = state.s;
                w_stack.bottomRows(p) = state.l;
                const Matrix aw = w_stack.topRows(p) + w_stack.bottomRows(p);
                const Matrix inner = m_next - aw - state.z / rho;
                Matrix w_target(2 * p, p);
                w_target.topRows(p) = w_stack.topRows(p) + cfg.tau_k * inner;
                w_target.bottomRows(p) = w_stack.bottomRows(p) + cfg.tau_k * inner;

                const Matrix s_target = state.s + cfg.tau_k * g;
                const Matrix l_target = state.l + cfg.tau_k * g;
                const double target_err =
                    std::max(linf_norm(Matrix(w_target.topRows(p) - s_target)),
                             linf_norm(Matrix(w_target.bottomRows(p) - l_target)));

                const double kappa_s = lambda * cfg.tau_k / rho;
                const double kappa_l = mu * cfg.tau_k / rho;
                const Matrix s_joint = prox::shrink(Matrix(w_target.topRows(p)), kappa_s);
                const Matrix s_sep = prox::shrink(s_target, kappa_s);
                const Matrix l_joint = nuclear_prox(w_target.bottomRows(p), kappa_l);
                const Matrix l_sep = nuclear_prox(l_target, kappa_l);
                const double block_err = std::max(linf_norm(Matrix(s_joint - s_sep)),
                                                  linf_norm(Matrix(l_joint - l_sep)));
                const double err = std::max(target_err, block_err);
                debug->max_decoupling_error = std::max(debug->max_decoupling_error, err);
                if (err > 1e-12) ++debug->decoupling_violations;
            }

            // Singular values of the pre-projection L step must equal the
            // shrunk singular values of its target.
            {
                const Matrix target = state.y + state.u / rho;
                const Vector sv_target = Eigen::BDCSVD<Matrix>(target).singularValues();
                const Vector sv_prox =
                    Eigen::BDCSVD<Matrix>(nuclear_prox(target, mu / rho)).singularValues();
                const Vector expected = prox::shrink(sv_target, mu / rho);
                const double err = (sv_prox - expected).lpNorm<Eigen::Infinity>();
                debug->max_shrinkage_error = std::max(debug->max_shrinkage_error, err);
                if (err > kShrinkageTol) ++debug->shrinkage_violations;
            }
        }

        Matrix z_next = state.z;
        Matrix u_next = state.u;
        dual_updates(z_next, u_next, m_next, s_next, l_next, y_next, tau,
                     cfg.dual_update_period, k);

        if (debug && !cfg.direct_observation) {
            const double znorm = l1_norm(z_next);
            debug->max_dual_ratio = std::max(debug->max_dual_ratio, znorm / dual_bound);
            if (znorm > dual_bound * (1.0 + kFeasTol)) ++debug->dual_bound_violations;
        }

        state.m = m_next;
        state.s = s_next;
        state.l = l_next;
        state.y = y_next;
        state.z = z_next;
        state.u = u_next;
        ++state.iter_index;

        if (!cfg.include_start_in_average) {
            state.s_sum += state.s;
            state.l_sum += state.l;
            ++state.sum_count;
            if (debug) {
                kept_s.push_back(state.s);
                kept_l.push_back(state.l);
            }
        }

        if (recorder) {
            recorder(IterationView2{state.iter_index, state.epoch_index, state.s,
                                    state.l, state.m, state.radius_s});
        }
    }

    Epoch2Result result;
    result.s_mean = state.s_sum / static_cast<double>(state.sum_count);
    result.l_mean = state.l_sum / static_cast<double>(state.sum_count);

    if (debug && !kept_s.empty()) {
        Matrix mean_s = Matrix::Zero(p, p);
        Matrix mean_l = Matrix::Zero(p, p);
        for (const Matrix& it : kept_s) mean_s += it;
        for (const Matrix& it : kept_l) mean_l += it;
        mean_s /= static_cast<double>(kept_s.size());
        mean_l /= static_cast<double>(kept_l.size());
        const double err = std::max(linf_norm(Matrix(mean_s - result.s_mean)),
                                    linf_norm(Matrix(mean_l - result.l_mean)));
        debug->max_averaging_error = std::max(debug->max_averaging_error, err);
        if (err > kAveragingTol) ++debug->averaging_violations;
    }

    state.s_center = result.s_mean;
    state.l_center = result.l_mean;
    result.stop = !check_stop(state.radius_s * state.radius_s, cfg.constants, p);
    if (!result.stop) {
        state.radius_s = std::sqrt(state.radius_s * state.radius_s / 2.0);
        state.radius_l = std::sqrt(state.radius_l * state.radius_l / 2.0);
    }
    ++state.epoch_index;
    return result;
}

Reason2Result reason2_solve(const Reason2Problem& problem,
                            loss::MatrixGradOracle& oracle, const Reason2Config& cfg,
                            const Recorder2& recorder) {
    cfg.validate();
    if (problem.p < 2) throw ConfigError("reason2: p must be >= 2");
    const int p = problem.p;

    Reason2State state;
    state.s_center = problem.s_center0.size() > 0 ? problem.s_center0 : Matrix::Zero(p, p);
    state.l_center = problem.l_center0.size() > 0 ? problem.l_center0 : Matrix::Zero(p, p);
    if (state.s_center.rows() != p || state.s_center.cols() != p ||
        state.l_center.rows() != p || state.l_center.cols() != p)
        throw ConfigError("reason2: initial centers have wrong shape");
    state.radius_s = cfg.baseline_mode ? kBaselineRadius : cfg.initial_radius;
    state.radius_l = cfg.baseline_mode ? kBaselineRadius
                                       : cfg.radius_ratio * cfg.initial_radius;

    const long budget = static_cast<long>(cfg.num_epochs) * cfg.epoch_length;
    const int epochs = cfg.baseline_mode ? 1 : cfg.num_epochs;

    Reason2Result result;
    double lambda_prev = std::numeric_limits<double>::infinity();
    long used = 0;
    for (int i = 1; i <= epochs; ++i) {
        Epoch2Setting setting;
        setting.length = cfg.baseline_mode ? budget : cfg.epoch_length;
        if (used + setting.length > budget) setting.length = budget - used;
        if (setting.length <= 0) break;

        const double sched_rs = cfg.baseline_mode ? cfg.initial_radius : state.radius_s;
        const double sched_rl =
            cfg.baseline_mode ? cfg.radius_ratio * cfg.initial_radius : state.radius_l;
        const int sched_epoch = cfg.baseline_mode ? 1 : i;
        const long sched_len = cfg.baseline_mode ? cfg.epoch_length : setting.length;
        switch (cfg.schedule) {
            case LambdaSchedule::Theory: {
                setting.params = theory_schedule2(cfg.constants, p, sched_epoch, sched_rs,
                                                  sched_rl, sched_len, cfg.mu_ratio,
                                                  cfg.rho_x, cfg.rho_scale,
                                                  cfg.appendix_rhox_term);
                setting.params.lambda = std::min(setting.params.lambda, lambda_prev);
                setting.params.mu = std::sqrt(cfg.mu_ratio) * setting.params.lambda;
                break;
            }
            case LambdaSchedule::Geometric:
                setting.params.lambda =
                    cfg.lambda1 * std::pow(cfg.lambda_decay, sched_epoch - 1);
                setting.params.mu = std::sqrt(cfg.mu_ratio) * setting.params.lambda;
                break;
            case LambdaSchedule::Fixed:
                setting.params.lambda = cfg.lambda1;
                setting.params.mu = std::sqrt(cfg.mu_ratio) * cfg.lambda1;
                break;
        }
        if (cfg.rho > 0.0) {
            setting.params.rho = cfg.rho;
        } else if (cfg.schedule != LambdaSchedule::Theory) {
            setting.params.rho =
                cfg.rho_scale * std::sqrt(static_cast<double>(sched_len) * std::log(double(p)) /
                                          (sched_rs * sched_rs + sched_rl * sched_rl));
        }
        setting.params.tau = cfg.tau > 0.0 ? cfg.tau : setting.params.rho;
        lambda_prev = setting.params.lambda;

        DebugStats2 epoch_debug;
        const Epoch2Result epoch =
            run_epoch2(state, oracle, cfg, setting,
                       cfg.debug_checks ? &epoch_debug : nullptr, recorder);
        if (cfg.debug_checks) result.debug.merge(epoch_debug);

        result.s_hat = epoch.s_mean;
        result.l_hat = epoch.l_mean;
        result.epoch_settings.push_back(setting);
        ++result.epochs_completed;
        used += setting.length;
        if (epoch.stop && !cfg.baseline_mode) {
            result.stopped_early = true;
            break;
        }
        if (used >= budget) break;
    }

    result.total_iterations = used;
    if (result.epochs_completed == 0) throw std::runtime_error("reason2: no epochs were run");
    return result;
}

}  // namespace reason::r2
