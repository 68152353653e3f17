// Command-line front end: seeded experiment runs, solver comparisons, and
// convergence-rate sweeps, with trajectory CSVs and reproducible manifests.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "reason/harness.hpp"
#include "reason/types.hpp"

namespace {

using namespace reason;
using harness::ExperimentConfig;
using harness::ExperimentKind;
using harness::SolverKind;

struct CliOptions {
    std::string config_file;
    std::vector<std::string> overrides;  // key=value pairs collected from flags
};

void add_override(CliOptions& opts, const std::string& key, const std::string& value) {
    opts.overrides.push_back(key + "=" + value);
}

// Register the shared flag set on a subcommand. Every flag maps onto one
// config key; flags override the config file.
void add_common_flags(CLI::App* cmd, CliOptions& opts) {
    cmd->add_option_function<std::string>(
        "--config", [&opts](const std::string& v) { opts.config_file = v; },
        "config file (key = value lines) or a manifest JSON to replay");
    auto opt = [cmd, &opts](const std::string& flag, const std::string& key,
                            const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&opts, key](const std::string& v) { add_override(opts, key, v); },
            help);
    };
    opt("--dim,-d", "dim", "vector dimension d (sparse)");
    opt("--p", "p", "matrix dimension p (decompose/ggm)");
    opt("--sparsity", "sparsity", "sparsity level s");
    opt("--rank", "rank", "rank r (decompose)");
    opt("--noise-var", "noise_var", "noise variance");
    opt("--covariate-bound", "covariate_bound", "B for Unif[-B,B] covariates");
    opt("--alpha", "alpha", "spikiness bound alpha");
    opt("--s-magnitude", "s_magnitude", "sparse entry magnitude (decompose)");
    opt("--epoch-len", "epoch_len", "iterations per epoch T0");
    opt("--epochs", "epochs", "number of epochs");
    opt("--radius", "radius", "initial radius R1 (0 = auto)");
    opt("--init-rel-error", "init_rel_error", "warm-start relative error (0 = cold start)");
    opt("--lambda", "lambda", "lambda1 (0 = auto)");
    opt("--lambda-decay", "lambda_decay", "geometric schedule decay per epoch");
    opt("--schedule", "schedule", "lambda schedule: theory|geometric|fixed");
    opt("--solver", "solver", "reason1|st-admm|reason2|unprojected");
    opt("--seed", "seed", "master seed");
    opt("--out", "out_dir", "output directory");
    opt("--tag", "run_tag", "output filename prefix");
    opt("--rho", "rho", "explicit rho (0 = schedule formula)");
    opt("--rho-scale", "rho_scale", "proportionality constant in the rho formula");
    opt("--rho-x", "rho_x", "proximal penalty rho_x");
    opt("--tau", "tau", "explicit dual step (0 = tau = rho)");
    opt("--gamma", "gamma", "strong convexity constant (0 = auto)");
    opt("--sigma", "sigma", "gradient noise scale (0 = auto)");
    opt("--lipschitz-g", "lipschitz_g", "local Lipschitz constant (0 = auto)");
    opt("--w", "w", "confidence parameter w");
    opt("--mu-ratio", "mu_ratio", "c_mu with mu^2 = c_mu lambda^2");
    opt("--radius-ratio", "radius_ratio", "c_r with nuclear radius = c_r R1");
    opt("--tau-k", "tau_k", "inner proximal step");
    opt("--inner-iters", "inner_iters", "inner S-update iterations t_s");
    opt("--dual-period", "dual_period", "dual update period m");
    opt("--m-l1-radius", "m_l1_radius", "l1 ball on the M iterate (latent models)");
    opt("--structure", "ggm_structure", "ggm structure: chain|grid|random");
    opt("--edges", "ggm_edges", "ggm random-structure edge count");
    opt("--offdiag", "ggm_offdiag", "ggm off-diagonal coupling");
    cmd->add_flag_function(
        "--debug", [&opts](std::int64_t) { add_override(opts, "debug", "true"); },
        "enable per-iteration invariant checks");
    cmd->add_flag_function(
        "--timing", [&opts](std::int64_t) { add_override(opts, "timing", "true"); },
        "record live wall-clock in the trajectory CSV (not byte-reproducible)");
    cmd->add_flag_function(
        "--gradient-mode",
        [&opts](std::int64_t) { add_override(opts, "direct_obs", "false"); },
        "use the gradient M-update instead of direct observation (decompose)");
    cmd->add_flag_function(
        "--variable-epochs",
        [&opts](std::int64_t) { add_override(opts, "variable_epochs", "true"); },
        "grow epoch lengths with the analysis rule");
}

ExperimentConfig resolve_config(const CliOptions& opts, ExperimentKind kind) {
    ExperimentConfig cfg;
    bool kind_from_file = false;
    if (!opts.config_file.empty()) {
        cfg = harness::config_from_file(opts.config_file);
        kind_from_file = true;
    }
    if (!kind_from_file) cfg.kind = kind;
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        harness::apply_key_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void print_summary(const harness::RunManifest& m) {
    const auto& s = m.summary;
    std::printf("run %s: iters=%ld epochs=%d wall=%.0fms\n", m.config.run_tag.c_str(),
                s.total_iterations, s.epochs_completed, s.total_wall_ms);
    if (m.config.kind == ExperimentKind::Decompose) {
        std::printf("  err_S=%.6g err_L=%.6g err_recon=%.6g\n", s.final_err_s,
                    s.final_err_l, s.final_err_recon);
        std::printf("  err_S at 0.02T/0.2T/T: %.6g %.6g %.6g\n", s.checkpoints.e002T,
                    s.checkpoints.e02T, s.checkpoints.eT);
    } else {
        std::printf("  rel_err=%.6g at 0.02T/0.2T/T: %.6g %.6g %.6g\n", s.final_err,
                    s.checkpoints.e002T, s.checkpoints.e02T, s.checkpoints.eT);
    }
    if (s.ggm_f1 >= 0.0) std::printf("  support F1=%.3f\n", s.ggm_f1);
    if (s.debug_violations >= 0)
        std::printf("  invariant violations: %ld\n", s.debug_violations);
    for (const auto& path : m.outputs) std::printf("  wrote %s\n", path.c_str());
}

int run_single(const CliOptions& opts, ExperimentKind kind) {
    const ExperimentConfig cfg = resolve_config(opts, kind);
    const auto result = harness::run_experiment(cfg);
    print_summary(result.manifest);
    return 0;
}

int run_compare(const CliOptions& opts, const std::vector<std::string>& solver_names) {
    std::vector<SolverKind> variants;
    for (const auto& name : solver_names)
        variants.push_back(harness::solver_from_string(name));
    if (variants.empty()) variants = {SolverKind::Reason1, SolverKind::StAdmm};

    ExperimentConfig cfg = resolve_config(opts, ExperimentKind::Sparse);
    const bool matrix = variants.front() == SolverKind::Reason2 ||
                        variants.front() == SolverKind::Unprojected;
    if (matrix) cfg.kind = ExperimentKind::Decompose;
    cfg.solver = variants.front();

    const auto result = harness::compare_solvers(cfg, variants);
    if (matrix) {
        std::printf("%-12s %12s %12s %12s\n", "solver", "err_S", "err_L", "err_recon");
        for (const auto& row : result.rows)
            std::printf("%-12s %12.5g %12.5g %12.5g\n",
                        harness::to_string(row.solver).c_str(), row.final_err_s,
                        row.final_err_l, row.final_err_recon);
    } else {
        std::printf("%-12s %12s %12s %12s %12s\n", "solver", "e002T", "e02T", "eT",
                    "final");
        for (const auto& row : result.rows)
            std::printf("%-12s %12.5g %12.5g %12.5g %12.5g\n",
                        harness::to_string(row.solver).c_str(), row.checkpoints.e002T,
                        row.checkpoints.e02T, row.checkpoints.eT, row.final_err);
    }
    return 0;
}

int run_rate(const CliOptions& opts, std::vector<int> dims, std::vector<int> sparsities,
             int seeds) {
    ExperimentConfig cfg = resolve_config(opts, ExperimentKind::Sparse);
    if (dims.empty()) dims = {50, 500, 5000};
    if (sparsities.empty()) sparsities = {1, 3, 5};
    const auto report = harness::rate_sweep(cfg, dims, sparsities, seeds);
    std::printf("%8s %4s %14s\n", "dim", "s", "final_sq_err");
    for (const auto& pt : report.points)
        std::printf("%8.0f %4d %14.6g\n", pt.dim, pt.sparsity, pt.final_sq_error);
    std::printf("slope %.4f\nintercept %.4f\nresiduals:", report.fit.slope,
                report.fit.intercept);
    for (double r : report.fit.residuals) std::printf(" %.4f", r);
    std::printf("\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"epoch-based projected stochastic ADMM benchmark harness"};
    app.require_subcommand(1);

    CliOptions sparse_opts, decompose_opts, ggm_opts, compare_opts, rate_opts;
    std::vector<std::string> compare_solver_names;
    std::vector<int> rate_dims, rate_sparsities;
    int rate_seeds = 3;

    auto* sparse = app.add_subcommand("sparse", "l1-regularized sparse regression run");
    add_common_flags(sparse, sparse_opts);
    auto* decompose =
        app.add_subcommand("decompose", "sparse + low-rank matrix decomposition run");
    add_common_flags(decompose, decompose_opts);
    auto* ggm = app.add_subcommand("ggm", "Gaussian graphical model selection run");
    add_common_flags(ggm, ggm_opts);
    auto* compare =
        app.add_subcommand("compare", "run solver variants on identical streams");
    add_common_flags(compare, compare_opts);
    compare->add_option("--solvers", compare_solver_names,
                        "solver variants to compare (repeatable)");
    auto* rate = app.add_subcommand("rate", "dimension sweep and rate fit");
    add_common_flags(rate, rate_opts);
    rate->add_option("--dims", rate_dims, "sweep dimensions");
    rate->add_option("--sparsities", rate_sparsities, "sparsity per dimension");
    rate->add_option("--rate-seeds", rate_seeds, "seeds per dimension");

    try {
        app.parse(argc, argv);
        if (sparse->parsed()) return run_single(sparse_opts, ExperimentKind::Sparse);
        if (decompose->parsed())
            return run_single(decompose_opts, ExperimentKind::Decompose);
        if (ggm->parsed()) return run_single(ggm_opts, ExperimentKind::Ggm);
        if (compare->parsed()) return run_compare(compare_opts, compare_solver_names);
        if (rate->parsed())
            return run_rate(rate_opts, rate_dims, rate_sparsities, rate_seeds);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
