#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reason/types.hpp"

namespace reason::harness {

enum class ExperimentKind { Sparse, Decompose, Ggm };
enum class SolverKind { Reason1, StAdmm, Reason2, Unprojected };

std::string to_string(ExperimentKind k);
std::string to_string(SolverKind s);
ExperimentKind kind_from_string(const std::string& s);
SolverKind solver_from_string(const std::string& s);

/// Full description of one run. Every field round-trips through the
/// key = value config format and the JSON manifest; a manifest alone
/// reproduces its run bit-identically. Fields defaulted to 0 are derived
/// from the generated instance at run time ("auto").
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Sparse;
    SolverKind solver = SolverKind::Reason1;
    std::uint64_t seed = 1;
    std::string out_dir;
    std::string run_tag;  // filename prefix; derived if empty
    // Live wall-clock values in the trajectory CSV; off by default because
    // timing makes reruns byte-unstable. Total wall time always lands in
    // the manifest summary.
    bool timing = false;

    // Generator.
    int dim = 20;        // d (sparse)
    int p = 40;          // matrix / precision dimension
    int sparsity = 1;    // s
    int rank = 1;        // r
    double noise_var = 0.5;
    double covariate_bound = 1.0;  // B for Unif[-B, B] covariates
    double alpha = 1.0;
    double s_magnitude = 1.0;
    std::string ggm_structure = "chain";
    int ggm_edges = 0;
    double ggm_offdiag = -0.4;
    double ggm_init_scale = 0.9;  // start-center perturbation, fraction of R1

    // Warm start: when positive, the initial prox center is the truth plus
    // a sparse seeded perturbation of this relative l2 size, and the auto
    // radius tightens to 1.05x its l1 distance. 0 starts from zero.
    double init_rel_error = 0.0;

    // Solver (shared).
    int epoch_len = 2000;
    int epochs = 5;
    double radius = 0.0;  // R1; auto when 0
    std::string schedule = "theory";
    double lambda = 0.0;  // lambda1; auto when 0
    double lambda_decay = 0.70710678118654752;
    double rho = 0.0;
    double rho_scale = 1.0;
    double rho_x = 1.0;
    double tau = 0.0;
    bool variable_epochs = false;
    double epoch_scale_c = 1.0;
    bool include_start_in_average = false;
    bool debug = false;

    // Analysis constants; auto when 0.
    double gamma = 0.0;
    double sigma = 0.0;
    double lipschitz_g = 0.0;
    double beta_p = 0.0;
    double w = 2.0;

    // Decomposition extras.
    double radius_ratio = 1.0;
    double mu_ratio = 1.0;
    double tau_k = 0.5;
    int inner_iters = 20;
    int dual_period = 4;
    bool direct_obs = true;
    double m_l1_radius = 0.0;

    void validate() const;
};

/// One measurement row. Sparse and GGM runs fill rel_err/objective;
/// decomposition runs fill the three error columns.
struct TrajectoryRecord {
    long iter = 0;
    int epoch = 1;
    double wall_ms = 0.0;
    double rel_err = 0.0;
    double err_recon = 0.0;
    double err_s = 0.0;
    double err_l = 0.0;
    double objective = 0.0;
    double radius = 0.0;
};

struct CheckpointErrors {
    double e002T = 0.0;
    double e02T = 0.0;
    double eT = 0.0;
};

struct RunSummary {
    double final_err = 0.0;  // sparse/ggm: rel l2 of the returned estimate
    double final_err_recon = 0.0;
    double final_err_s = 0.0;
    double final_err_l = 0.0;
    CheckpointErrors checkpoints;  // sparse/ggm: rel_err; decompose: err_s
    CheckpointErrors checkpoints_recon;
    CheckpointErrors checkpoints_l;
    int epochs_completed = 0;
    long total_iterations = 0;
    double total_wall_ms = 0.0;
    long debug_violations = -1;  // -1 when debug checks were off
    double ggm_f1 = -1.0;        // -1 when not a GGM run
};

struct RunManifest {
    ExperimentConfig config;
    std::string revision;
    RunSummary summary;
    std::vector<std::string> outputs;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
bool operator==(const RunSummary& a, const RunSummary& b);
bool operator==(const RunManifest& a, const RunManifest& b);
inline bool operator==(const CheckpointErrors& a, const CheckpointErrors& b) {
    return a.e002T == b.e002T && a.e02T == b.e02T && a.eT == b.eT;
}

/// Key = value config text (one pair per line, '#' comments).
ExperimentConfig config_from_text(const std::string& text);
ExperimentConfig config_from_file(const std::string& path);
std::string config_to_text(const ExperimentConfig& cfg);
void apply_key_value(ExperimentConfig& cfg, const std::string& key,
                     const std::string& value);

/// JSON manifest serialization; parse(write(m)) == m.
std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);
RunManifest manifest_from_file(const std::string& path);

/// Runs one experiment end to end: builds the seeded instance and oracle,
/// runs the configured solver, records the per-iteration trajectory, and
/// (when out_dir is set) writes <tag>_trajectory.csv and <tag>_manifest.json.
struct RunResult {
    RunManifest manifest;
    std::vector<TrajectoryRecord> trajectory;
};
RunResult run_experiment(const ExperimentConfig& cfg);

/// Deterministic checkpoint extraction at floor(frac * T), 1-based.
long checkpoint_index(long total_iterations, double fraction);

/// Runs each solver variant on identical seeded streams and aligns their
/// checkpoint errors. Writes <tag>_compare.csv when out_dir is set.
struct ComparisonRow {
    SolverKind solver = SolverKind::Reason1;
    CheckpointErrors checkpoints;
    double final_err = 0.0;
    double final_err_s = 0.0;
    double final_err_l = 0.0;
    double final_err_recon = 0.0;
};
struct ComparisonResult {
    std::vector<ComparisonRow> rows;
    std::vector<RunManifest> manifests;
};
ComparisonResult compare_solvers(const ExperimentConfig& base,
                                 const std::vector<SolverKind>& variants);

/// log(final squared error) regressed on log(s log d) at fixed T.
struct RatePoint {
    double dim = 0.0;
    int sparsity = 1;
    double final_sq_error = 0.0;
};
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> residuals;
};
RateFit fit_rate(const std::vector<RatePoint>& points);

/// Dimension sweep driver for the rate report: one run per (dim, seed),
/// median squared error per dimension.
struct RateReport {
    std::vector<RatePoint> points;
    RateFit fit;
};
RateReport rate_sweep(const ExperimentConfig& base, const std::vector<int>& dims,
                      const std::vector<int>& sparsities, int num_seeds);

/// F1 of the thresholded off-diagonal support of `estimate` against the
/// off-diagonal pattern of `truth`. The threshold is one tenth of the
/// smallest nonzero off-diagonal magnitude of the truth.
double ggm_support_f1(const Matrix& estimate, const Matrix& truth);

/// CSV helpers (shortest round-trip double formatting, byte-stable).
std::string format_double(double v);
void write_trajectory_csv(const std::string& path, ExperimentKind kind,
                          const std::vector<TrajectoryRecord>& rows);

std::string revision_string();

}  // namespace reason::harness
