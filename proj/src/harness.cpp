#include "reason/harness.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reason/datagen.hpp"
#include "reason/oracles.hpp"
#include "reason/projections.hpp"
#include "reason/reason1.hpp"
#include "reason/reason2.hpp"
#include "reason/rng.hpp"

#ifndef REASON_GIT_REVISION
#define REASON_GIT_REVISION "unknown"
#endif

namespace reason::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Sub-seed stream ids.
enum : std::uint64_t { kGeneratorSeed = 11, kInitSeed = 21 };

double elapsed_ms(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start)
        .count();
}

}  // namespace

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Sparse: return "sparse";
        case ExperimentKind::Decompose: return "decompose";
        case ExperimentKind::Ggm: return "ggm";
    }
    return "sparse";
}

std::string to_string(SolverKind s) {
    switch (s) {
        case SolverKind::Reason1: return "reason1";
        case SolverKind::StAdmm: return "st-admm";
        case SolverKind::Reason2: return "reason2";
        case SolverKind::Unprojected: return "unprojected";
    }
    return "reason1";
}

ExperimentKind kind_from_string(const std::string& s) {
    if (s == "sparse") return ExperimentKind::Sparse;
    if (s == "decompose") return ExperimentKind::Decompose;
    if (s == "ggm") return ExperimentKind::Ggm;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

SolverKind solver_from_string(const std::string& s) {
    if (s == "reason1") return SolverKind::Reason1;
    if (s == "st-admm") return SolverKind::StAdmm;
    if (s == "reason2") return SolverKind::Reason2;
    if (s == "unprojected") return SolverKind::Unprojected;
    throw ConfigError("unknown solver '" + s + "'");
}

void ExperimentConfig::validate() const {
    if (epoch_len < 1) throw ConfigError("epoch_len must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (noise_var < 0.0) throw ConfigError("noise_var must be nonnegative");
    if (radius < 0.0) throw ConfigError("radius must be nonnegative");
    if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    schedule_from_string(schedule);  // throws on bad value
    switch (kind) {
        case ExperimentKind::Sparse:
            if (dim < 2) throw ConfigError("sparse runs need dim >= 2");
            if (sparsity < 1 || sparsity > dim) throw ConfigError("need 1 <= sparsity <= dim");
            if (covariate_bound <= 0.0) throw ConfigError("covariate_bound must be positive");
            if (solver != SolverKind::Reason1 && solver != SolverKind::StAdmm)
                throw ConfigError("sparse runs use solver reason1 or st-admm");
            break;
        case ExperimentKind::Decompose:
            if (p < 2) throw ConfigError("decompose runs need p >= 2");
            if (rank < 0 || rank > p) throw ConfigError("need 0 <= rank <= p");
            if (alpha <= 0.0) throw ConfigError("alpha must be positive");
            if (solver != SolverKind::Reason2 && solver != SolverKind::Unprojected)
                throw ConfigError("decompose runs use solver reason2 or unprojected");
            break;
        case ExperimentKind::Ggm:
            if (p < 2) throw ConfigError("ggm runs need p >= 2");
            if (solver != SolverKind::Reason1 && solver != SolverKind::StAdmm)
                throw ConfigError("ggm runs use solver reason1 or st-admm");
            break;
    }
}

// ---------------------------------------------------------------------------
// Config field traversal: one definition drives the text format, the JSON
// manifest, equality, and key lookup.

template <class Config, class Visitor>
void visit_config(Config& c, Visitor&& v) {
    v("kind", c.kind);
    v("solver", c.solver);
    v("seed", c.seed);
    v("out_dir", c.out_dir);
    v("run_tag", c.run_tag);
    v("timing", c.timing);
    v("dim", c.dim);
    v("p", c.p);
    v("sparsity", c.sparsity);
    v("rank", c.rank);
    v("noise_var", c.noise_var);
    v("covariate_bound", c.covariate_bound);
    v("alpha", c.alpha);
    v("s_magnitude", c.s_magnitude);
    v("ggm_structure", c.ggm_structure);
    v("ggm_edges", c.ggm_edges);
    v("ggm_offdiag", c.ggm_offdiag);
    v("ggm_init_scale", c.ggm_init_scale);
    v("init_rel_error", c.init_rel_error);
    v("epoch_len", c.epoch_len);
    v("epochs", c.epochs);
    v("radius", c.radius);
    v("schedule", c.schedule);
    v("lambda", c.lambda);
    v("lambda_decay", c.lambda_decay);
    v("rho", c.rho);
    v("rho_scale", c.rho_scale);
    v("rho_x", c.rho_x);
    v("tau", c.tau);
    v("variable_epochs", c.variable_epochs);
    v("epoch_scale_c", c.epoch_scale_c);
    v("include_start_in_average", c.include_start_in_average);
    v("debug", c.debug);
    v("gamma", c.gamma);
    v("sigma", c.sigma);
    v("lipschitz_g", c.lipschitz_g);
    v("beta_p", c.beta_p);
    v("w", c.w);
    v("radius_ratio", c.radius_ratio);
    v("mu_ratio", c.mu_ratio);
    v("tau_k", c.tau_k);
    v("inner_iters", c.inner_iters);
    v("dual_period", c.dual_period);
    v("direct_obs", c.direct_obs);
    v("m_l1_radius", c.m_l1_radius);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "0";
    return std::string(buf, ptr);
}

namespace {

struct TextWriter {
    std::ostringstream out;
    void operator()(const char* name, const ExperimentKind& v) { line(name, to_string(v)); }
    void operator()(const char* name, const SolverKind& v) { line(name, to_string(v)); }
    void operator()(const char* name, const std::string& v) { line(name, v); }
    void operator()(const char* name, const bool& v) { line(name, v ? "true" : "false"); }
    void operator()(const char* name, const int& v) { line(name, std::to_string(v)); }
    void operator()(const char* name, const std::uint64_t& v) { line(name, std::to_string(v)); }
    void operator()(const char* name, const double& v) { line(name, format_double(v)); }
    void line(const char* name, const std::string& value) {
        out << name << " = " << value << "\n";
    }
};

struct KeyApplier {
    const std::string& key;
    const std::string& value;
    bool found = false;

    void operator()(const char* name, ExperimentKind& v) {
        if (match(name)) v = kind_from_string(value);
    }
    void operator()(const char* name, SolverKind& v) {
        if (match(name)) v = solver_from_string(value);
    }
    void operator()(const char* name, std::string& v) {
        if (match(name)) v = value;
    }
    void operator()(const char* name, bool& v) {
        if (!match(name)) return;
        if (value == "true" || value == "1") v = true;
        else if (value == "false" || value == "0") v = false;
        else throw ConfigError("bad boolean for " + std::string(name) + ": " + value);
    }
    void operator()(const char* name, int& v) {
        if (match(name)) v = static_cast<int>(parse_ll(name));
    }
    void operator()(const char* name, std::uint64_t& v) {
        if (!match(name)) return;
        try {
            v = std::stoull(value);
        } catch (const std::exception&) {
            throw ConfigError("bad integer for " + std::string(name) + ": " + value);
        }
    }
    void operator()(const char* name, double& v) {
        if (!match(name)) return;
        try {
            std::size_t pos = 0;
            v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw ConfigError("bad number for " + std::string(name) + ": " + value);
        }
    }

    bool match(const char* name) {
        if (key != name) return false;
        found = true;
        return true;
    }
    long long parse_ll(const char* name) {
        try {
            return std::stoll(value);
        } catch (const std::exception&) {
            throw ConfigError("bad integer for " + std::string(name) + ": " + value);
        }
    }
};

struct JsonWriter {
    json& j;
    void operator()(const char* name, const ExperimentKind& v) { j[name] = to_string(v); }
    void operator()(const char* name, const SolverKind& v) { j[name] = to_string(v); }
    template <class T>
    void operator()(const char* name, const T& v) { j[name] = v; }
};

struct JsonReader {
    const json& j;
    void operator()(const char* name, ExperimentKind& v) {
        if (j.contains(name)) v = kind_from_string(j.at(name).get<std::string>());
    }
    void operator()(const char* name, SolverKind& v) {
        if (j.contains(name)) v = solver_from_string(j.at(name).get<std::string>());
    }
    template <class T>
    void operator()(const char* name, T& v) {
        if (j.contains(name)) v = j.at(name).get<T>();
    }
};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string config_to_text(const ExperimentConfig& cfg) {
    TextWriter w;
    visit_config(cfg, w);
    return w.out.str();
}

void apply_key_value(ExperimentConfig& cfg, const std::string& key,
                     const std::string& value) {
    KeyApplier applier{key, value};
    visit_config(cfg, applier);
    if (!applier.found) throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig config_from_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        apply_key_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    // A manifest is also accepted as a config source: take its snapshot.
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{')
        return manifest_from_json(text).config;
    return config_from_text(text);
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return config_to_text(a) == config_to_text(b);
}

// ---------------------------------------------------------------------------
// Manifest JSON

namespace {

json checkpoints_to_json(const CheckpointErrors& c) {
    return json{{"e002T", c.e002T}, {"e02T", c.e02T}, {"eT", c.eT}};
}

CheckpointErrors checkpoints_from_json(const json& j) {
    CheckpointErrors c;
    c.e002T = j.at("e002T").get<double>();
    c.e02T = j.at("e02T").get<double>();
    c.eT = j.at("eT").get<double>();
    return c;
}

}  // namespace

std::string manifest_to_json(const RunManifest& m) {
    json j;
    j["config"] = json::object();
    JsonWriter cw{j["config"]};
    visit_config(m.config, cw);
    j["revision"] = m.revision;
    json s;
    s["final_err"] = m.summary.final_err;
    s["final_err_recon"] = m.summary.final_err_recon;
    s["final_err_S"] = m.summary.final_err_s;
    s["final_err_L"] = m.summary.final_err_l;
    s["e002T"] = m.summary.checkpoints.e002T;
    s["e02T"] = m.summary.checkpoints.e02T;
    s["eT"] = m.summary.checkpoints.eT;
    s["checkpoints_recon"] = checkpoints_to_json(m.summary.checkpoints_recon);
    s["checkpoints_L"] = checkpoints_to_json(m.summary.checkpoints_l);
    s["epochs_completed"] = m.summary.epochs_completed;
    s["total_iterations"] = m.summary.total_iterations;
    s["total_wall_ms"] = m.summary.total_wall_ms;
    s["debug_violations"] = m.summary.debug_violations;
    s["ggm_f1"] = m.summary.ggm_f1;
    j["summary"] = s;
    j["outputs"] = m.outputs;
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad manifest JSON: ") + e.what());
    }
    RunManifest m;
    JsonReader cr{j.at("config")};
    visit_config(m.config, cr);
    m.revision = j.value("revision", std::string("unknown"));
    const json& s = j.at("summary");
    m.summary.final_err = s.at("final_err").get<double>();
    m.summary.final_err_recon = s.at("final_err_recon").get<double>();
    m.summary.final_err_s = s.at("final_err_S").get<double>();
    m.summary.final_err_l = s.at("final_err_L").get<double>();
    m.summary.checkpoints.e002T = s.at("e002T").get<double>();
    m.summary.checkpoints.e02T = s.at("e02T").get<double>();
    m.summary.checkpoints.eT = s.at("eT").get<double>();
    m.summary.checkpoints_recon = checkpoints_from_json(s.at("checkpoints_recon"));
    m.summary.checkpoints_l = checkpoints_from_json(s.at("checkpoints_L"));
    m.summary.epochs_completed = s.at("epochs_completed").get<int>();
    m.summary.total_iterations = s.at("total_iterations").get<long>();
    m.summary.total_wall_ms = s.at("total_wall_ms").get<double>();
    m.summary.debug_violations = s.at("debug_violations").get<long>();
    m.summary.ggm_f1 = s.at("ggm_f1").get<double>();
    m.outputs = j.value("outputs", std::vector<std::string>{});
    return m;
}

RunManifest manifest_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return manifest_from_json(buf.str());
}

bool operator==(const RunSummary& a, const RunSummary& b) {
    RunManifest ma, mb;
    ma.summary = a;
    mb.summary = b;
    return manifest_to_json(ma) == manifest_to_json(mb);
}

bool operator==(const RunManifest& a, const RunManifest& b) {
    return manifest_to_json(a) == manifest_to_json(b);
}

std::string revision_string() { return REASON_GIT_REVISION; }

// ---------------------------------------------------------------------------
// Trajectory CSV

void write_trajectory_csv(const std::string& path, ExperimentKind kind,
                          const std::vector<TrajectoryRecord>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    if (kind == ExperimentKind::Decompose) {
        out << "iter,epoch,wall_ms,err_recon,err_S,err_L,radius\n";
        for (const auto& r : rows)
            out << r.iter << ',' << r.epoch << ',' << format_double(r.wall_ms) << ','
                << format_double(r.err_recon) << ',' << format_double(r.err_s) << ','
                << format_double(r.err_l) << ',' << format_double(r.radius) << '\n';
    } else {
        out << "iter,epoch,wall_ms,rel_err,objective,radius\n";
        for (const auto& r : rows)
            out << r.iter << ',' << r.epoch << ',' << format_double(r.wall_ms) << ','
                << format_double(r.rel_err) << ',' << format_double(r.objective) << ','
                << format_double(r.radius) << '\n';
    }
    if (!out) throw IoError("failed while writing " + path);
}

long checkpoint_index(long total_iterations, double fraction) {
    const long idx = static_cast<long>(std::floor(fraction * static_cast<double>(total_iterations)));
    return std::clamp<long>(idx, 1, total_iterations);
}

namespace {

CheckpointErrors extract_checkpoints(const std::vector<TrajectoryRecord>& rows,
                                     double TrajectoryRecord::*field) {
    CheckpointErrors c;
    if (rows.empty()) return c;
    const long t = static_cast<long>(rows.size());
    c.e002T = rows[static_cast<std::size_t>(checkpoint_index(t, 0.02) - 1)].*field;
    c.e02T = rows[static_cast<std::size_t>(checkpoint_index(t, 0.2) - 1)].*field;
    c.eT = rows[static_cast<std::size_t>(checkpoint_index(t, 1.0) - 1)].*field;
    return c;
}

std::string default_tag(const ExperimentConfig& cfg) {
    return to_string(cfg.kind) + "_" + to_string(cfg.solver) + "_s" +
           std::to_string(cfg.seed);
}

// Resolved (auto fields filled) solver setups per experiment kind.

struct SparseSetup {
    datagen::SparseRegressionStream stream;
    r1::Reason1Config rcfg;
    r1::Reason1Problem problem;
};

SparseSetup build_sparse(ExperimentConfig& cfg) {
    auto stream = datagen::gen_sparse_regression(
        cfg.dim, cfg.sparsity, cfg.covariate_bound, cfg.noise_var,
        rng::derive_seed(cfg.seed, kGeneratorSeed));
    const Vector& theta_star = stream.instance().theta_star;

    // Warm start: a sparse perturbation of the truth (a pilot estimate errs
    // mostly on and near the support), sized to the requested relative l2
    // error. The ball radius tightens to match.
    Vector start = Vector::Zero(cfg.dim);
    if (cfg.init_rel_error > 0.0) {
        rng::Rng perturb(rng::derive_seed(cfg.seed, kInitSeed));
        Vector delta = Vector::Zero(cfg.dim);
        for (int j = 0; j < cfg.dim; ++j)
            if (theta_star[j] != 0.0) delta[j] = perturb.normal();
        for (int extra = 0; extra < cfg.sparsity; ++extra)
            delta[static_cast<Eigen::Index>(perturb.below(cfg.dim))] += perturb.normal();
        delta *= cfg.init_rel_error * theta_star.norm() / delta.norm();
        start = theta_star + delta;
        if (cfg.radius == 0.0) cfg.radius = 6.0 * delta.lpNorm<1>();
    }
    if (cfg.radius == 0.0) cfg.radius = 1.1 * theta_star.lpNorm<1>();
    const double b = cfg.covariate_bound;
    const auto auto_constants =
        loss::least_squares_constants(b, cfg.radius, cfg.noise_var, cfg.sparsity);
    if (cfg.gamma == 0.0) cfg.gamma = auto_constants.gamma;
    if (cfg.sigma == 0.0) cfg.sigma = auto_constants.sigma;
    if (cfg.lipschitz_g == 0.0) cfg.lipschitz_g = auto_constants.lipschitz_g;
    if (cfg.beta_p == 0.0) cfg.beta_p = std::sqrt(static_cast<double>(cfg.dim));

    r1::Reason1Config rcfg;
    rcfg.epoch_length = cfg.epoch_len;
    rcfg.num_epochs = cfg.epochs;
    rcfg.initial_radius = cfg.radius;
    rcfg.schedule = schedule_from_string(cfg.schedule);
    rcfg.lambda_decay = cfg.lambda_decay;
    rcfg.rho = cfg.rho;
    rcfg.rho_scale = cfg.rho_scale;
    rcfg.rho_x = cfg.rho_x;
    rcfg.tau = cfg.tau;
    rcfg.baseline_mode = cfg.solver == SolverKind::StAdmm;
    rcfg.variable_epochs = cfg.variable_epochs;
    rcfg.epoch_scale_c = cfg.epoch_scale_c;
    rcfg.include_start_in_average = cfg.include_start_in_average;
    rcfg.debug_checks = cfg.debug;
    rcfg.constants.gamma = cfg.gamma;
    rcfg.constants.sigma = cfg.sigma;
    rcfg.constants.lipschitz_g = cfg.lipschitz_g;
    rcfg.constants.beta_p = cfg.beta_p;
    rcfg.constants.alpha = cfg.alpha;
    rcfg.constants.w = cfg.w;
    rcfg.constants.sparsity_s = cfg.sparsity;
    rcfg.constants.rank_r = cfg.rank;

    if (cfg.lambda == 0.0)
        cfg.lambda = r1::theory_schedule(rcfg.constants, cfg.dim, 1, cfg.radius,
                                         cfg.epoch_len, cfg.rho_scale)
                         .lambda;
    rcfg.lambda1 = cfg.lambda;

    // Default penalty for the practical schedules: a third of the per-sample
    // stability level d B^2 / 6; the ball projection supplies the remaining
    // damping. The theory schedule keeps its own formula.
    if (cfg.rho == 0.0 && rcfg.schedule != LambdaSchedule::Theory) {
        cfg.rho = cfg.dim * b * b / 18.0;
        rcfg.rho = cfg.rho;
    }

    // Honest l1 bound on the per-sample gradient over the run:
    // |x (resid)|_1 <= d B (B R1 + 5 eta).
    rcfg.debug_dual_g =
        cfg.dim * b * (b * cfg.radius + 5.0 * std::sqrt(cfg.noise_var));

    r1::Reason1Problem problem;
    problem.dim = cfg.dim;
    problem.initial_center = start;
    return SparseSetup{std::move(stream), std::move(rcfg), std::move(problem)};
}

struct GgmSetup {
    datagen::GgmStream stream;
    r1::Reason1Config rcfg;
    r1::Reason1Problem problem;
};

GgmSetup build_ggm(ExperimentConfig& cfg) {
    datagen::GgmStructure structure;
    if (cfg.ggm_structure == "chain") structure = datagen::GgmStructure::Chain;
    else if (cfg.ggm_structure == "grid") structure = datagen::GgmStructure::Grid;
    else if (cfg.ggm_structure == "random") structure = datagen::GgmStructure::Random;
    else throw ConfigError("unknown ggm_structure '" + cfg.ggm_structure + "'");

    auto stream = datagen::gen_ggm(cfg.p, structure,
                                   rng::derive_seed(cfg.seed, kGeneratorSeed),
                                   cfg.ggm_edges, cfg.ggm_offdiag);
    const auto& inst = stream.instance();
    const double sigma_fro = inst.sigma_star.norm();
    const double radius_cap = 0.25 / sigma_fro;
    if (cfg.radius == 0.0) cfg.radius = 0.999 * radius_cap;
    // Startup precondition for the log-det loss: the analysis requires the
    // initial radius to be at most 0.25/|Sigma*|_F.
    if (cfg.radius > radius_cap)
        throw ConfigError("ggm: radius " + format_double(cfg.radius) +
                          " violates the precondition radius <= 0.25/|Sigma*|_F = " +
                          format_double(radius_cap));

    const int p = cfg.p;
    const double max_diag = inst.sigma_star.diagonal().maxCoeff();
    const double theta_norm2 = inst.theta_star.operatorNorm();
    if (cfg.gamma == 0.0) {
        const double top = theta_norm2 + 2.0 * cfg.radius;
        cfg.gamma = 1.0 / (top * top);
    }
    if (cfg.sigma == 0.0) cfg.sigma = 3.0 * max_diag * std::sqrt(std::log(double(p * p)));
    if (cfg.lipschitz_g == 0.0)
        cfg.lipschitz_g = 9.0 * max_diag * std::log(double(p)) + l1_norm(inst.sigma_star);
    if (cfg.beta_p == 0.0) cfg.beta_p = std::sqrt(static_cast<double>(p));

    r1::Reason1Config rcfg;
    rcfg.epoch_length = cfg.epoch_len;
    rcfg.num_epochs = cfg.epochs;
    rcfg.initial_radius = cfg.radius;
    rcfg.schedule = schedule_from_string(cfg.schedule);
    rcfg.lambda_decay = cfg.lambda_decay;
    rcfg.rho = cfg.rho;
    rcfg.rho_scale = cfg.rho_scale;
    rcfg.rho_x = cfg.rho_x;
    // The log-det analysis uses the dual step sqrt(T0) instead of rho.
    rcfg.tau = cfg.tau > 0.0 ? cfg.tau : std::sqrt(static_cast<double>(cfg.epoch_len));
    rcfg.baseline_mode = cfg.solver == SolverKind::StAdmm;
    rcfg.variable_epochs = cfg.variable_epochs;
    rcfg.epoch_scale_c = cfg.epoch_scale_c;
    rcfg.include_start_in_average = cfg.include_start_in_average;
    rcfg.debug_checks = cfg.debug;
    rcfg.constants.gamma = cfg.gamma;
    rcfg.constants.sigma = cfg.sigma;
    rcfg.constants.lipschitz_g = cfg.lipschitz_g;
    rcfg.constants.beta_p = cfg.beta_p;
    rcfg.constants.alpha = cfg.alpha;
    rcfg.constants.w = cfg.w;
    rcfg.constants.sparsity_s = std::max(1, cfg.sparsity);
    rcfg.constants.rank_r = 0;

    if (cfg.lambda == 0.0) {
        // Entry scale of the gradient noise x x^T - Sigma at the truth.
        cfg.lambda = 1.5 * max_diag *
                     std::sqrt(2.0 * std::log(double(p) * p) / cfg.epoch_len);
    }
    rcfg.lambda1 = cfg.lambda;
    rcfg.debug_dual_g = cfg.lipschitz_g + 50.0 * p * max_diag;

    // The run refines a feasible start: truth plus a symmetric
    // perturbation of l1 size ggm_init_scale * R1.
    rng::Rng perturb(rng::derive_seed(cfg.seed, kInitSeed));
    Matrix delta = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) {
            const double e = perturb.normal();
            delta(i, j) = e;
            delta(j, i) = e;
        }
    const double target = cfg.ggm_init_scale * cfg.radius;
    delta *= target / l1_norm(delta);
    const Matrix start = inst.theta_star + delta;

    r1::Reason1Problem problem;
    problem.dim = p * p;
    problem.initial_center = Eigen::Map<const Vector>(start.data(), start.size());
    return GgmSetup{std::move(stream), std::move(rcfg), std::move(problem)};
}

struct DecomposeSetup {
    datagen::DecompositionStream stream;
    r2::Reason2Config rcfg;
    r2::Reason2Problem problem;
};

DecomposeSetup build_decompose(ExperimentConfig& cfg) {
    auto stream = datagen::gen_independent_noise(
        cfg.p, cfg.sparsity, cfg.rank, cfg.alpha, cfg.noise_var,
        rng::derive_seed(cfg.seed, kGeneratorSeed), cfg.s_magnitude);
    const auto& inst = stream.instance();

    if (cfg.radius == 0.0) cfg.radius = 1.2 * l1_norm(inst.s_star);
    if (cfg.gamma == 0.0) cfg.gamma = 1.0;  // square loss is exactly 1-strongly convex
    if (cfg.beta_p == 0.0) cfg.beta_p = std::sqrt(static_cast<double>(cfg.p));
    if (cfg.sigma == 0.0)
        cfg.sigma = std::max(1e-12, 3.0 * std::sqrt(cfg.noise_var));
    if (cfg.lipschitz_g == 0.0)
        cfg.lipschitz_g = l1_norm(Matrix(inst.m_star())) +
                          2.0 * cfg.radius +
                          5.0 * std::sqrt(cfg.noise_var) * cfg.p * cfg.p;

    r2::Reason2Config rcfg;
    rcfg.epoch_length = cfg.epoch_len;
    rcfg.num_epochs = cfg.epochs;
    rcfg.initial_radius = cfg.radius;
    rcfg.radius_ratio = cfg.radius_ratio;
    rcfg.schedule = schedule_from_string(cfg.schedule);
    rcfg.lambda_decay = cfg.lambda_decay;
    rcfg.mu_ratio = cfg.mu_ratio;
    rcfg.rho = cfg.rho;
    rcfg.rho_scale = cfg.rho_scale;
    rcfg.rho_x = cfg.rho_x;
    rcfg.tau = cfg.tau;
    rcfg.tau_k = cfg.tau_k;
    rcfg.inner_iters = cfg.inner_iters;
    rcfg.alpha = cfg.alpha;
    rcfg.dual_update_period = cfg.dual_period;
    rcfg.direct_observation = cfg.direct_obs;
    rcfg.m_l1_radius = cfg.m_l1_radius;
    rcfg.baseline_mode = cfg.solver == SolverKind::Unprojected;
    rcfg.include_start_in_average = cfg.include_start_in_average;
    rcfg.debug_checks = cfg.debug;
    rcfg.constants.gamma = cfg.gamma;
    rcfg.constants.sigma = cfg.sigma;
    rcfg.constants.lipschitz_g = cfg.lipschitz_g;
    rcfg.constants.beta_p = cfg.beta_p;
    rcfg.constants.alpha = cfg.alpha;
    rcfg.constants.w = cfg.w;
    rcfg.constants.sparsity_s = std::max(1, cfg.sparsity);
    rcfg.constants.rank_r = cfg.rank;

    if (cfg.lambda == 0.0) {
        if (schedule_from_string(cfg.schedule) == LambdaSchedule::Theory) {
            cfg.lambda = r2::theory_schedule2(rcfg.constants, cfg.p, 1, cfg.radius,
                                              cfg.radius_ratio * cfg.radius,
                                              cfg.epoch_len, cfg.mu_ratio, cfg.rho_x,
                                              cfg.rho_scale)
                             .lambda;
        } else {
            // Noise scale of the averaged target entries.
            cfg.lambda = 2.0 * std::sqrt(cfg.noise_var * std::log(double(cfg.p)) /
                                         cfg.epoch_len);
        }
    }
    rcfg.lambda1 = cfg.lambda;
    rcfg.debug_dual_g = cfg.lipschitz_g;

    r2::Reason2Problem problem;
    problem.p = cfg.p;
    problem.s_center0 = Matrix::Zero(cfg.p, cfg.p);
    problem.l_center0 = Matrix::Zero(cfg.p, cfg.p);
    return DecomposeSetup{std::move(stream), std::move(rcfg), std::move(problem)};
}

}  // namespace

double ggm_support_f1(const Matrix& estimate, const Matrix& truth) {
    const int p = static_cast<int>(truth.rows());
    double min_mag = std::numeric_limits<double>::infinity();
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            if (i != j && truth(i, j) != 0.0) min_mag = std::min(min_mag, std::abs(truth(i, j)));
    if (!std::isfinite(min_mag)) min_mag = 1.0;  // empty true support
    const double threshold = 0.1 * min_mag;

    long tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            if (i == j) continue;
            const bool est = std::abs(estimate(i, j)) > threshold;
            const bool truth_edge = truth(i, j) != 0.0;
            tp += est && truth_edge;
            fp += est && !truth_edge;
            fn += !est && truth_edge;
        }
    if (tp == 0 && fp == 0 && fn == 0) return 1.0;
    return 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
}

RunResult run_experiment(const ExperimentConfig& original) {
    original.validate();
    ExperimentConfig cfg = original;  // auto fields get resolved below
    if (cfg.run_tag.empty()) cfg.run_tag = default_tag(cfg);

    RunResult result;
    std::vector<TrajectoryRecord>& rows = result.trajectory;
    RunSummary summary;
    const auto start = std::chrono::steady_clock::now();

    if (cfg.kind == ExperimentKind::Sparse || cfg.kind == ExperimentKind::Ggm) {
        Vector truth;           // vectorized ground truth
        double truth_norm = 0.0;
        Matrix theta_star_mat;  // ggm only

        r1::Reason1Result solved;
        if (cfg.kind == ExperimentKind::Sparse) {
            SparseSetup setup = build_sparse(cfg);
            truth = setup.stream.instance().theta_star;
            truth_norm = truth.norm();
            const double pop_curv = cfg.covariate_bound * cfg.covariate_bound / 3.0;
            const double noise_floor = cfg.noise_var / 2.0;
            loss::LeastSquaresOracle oracle(setup.stream.clone_at(0));
            auto recorder = [&](const r1::IterationView& it) {
                TrajectoryRecord r;
                r.iter = it.iter;
                r.epoch = it.epoch;
                r.wall_ms = cfg.timing ? elapsed_ms(start) : 0.0;
                r.rel_err = (it.theta - truth).norm() / truth_norm;
                r.objective = 0.5 * pop_curv * (it.theta - truth).squaredNorm() +
                              noise_floor + it.lambda * it.theta.lpNorm<1>();
                r.radius = it.radius;
                rows.push_back(r);
            };
            solved = r1::reason1_solve(setup.problem, oracle, setup.rcfg, recorder);
            summary.final_err = (solved.theta_hat - truth).norm() / truth_norm;
        } else {
            GgmSetup setup = build_ggm(cfg);
            const auto& inst = setup.stream.instance();
            theta_star_mat = inst.theta_star;
            truth = Eigen::Map<const Vector>(inst.theta_star.data(), inst.theta_star.size());
            truth_norm = truth.norm();
            const Matrix sigma_star = inst.sigma_star;
            const int p = cfg.p;
            loss::LogDetVectorOracle oracle(setup.stream.clone_at(0));
            auto recorder = [&](const r1::IterationView& it) {
                TrajectoryRecord r;
                r.iter = it.iter;
                r.epoch = it.epoch;
                r.wall_ms = cfg.timing ? elapsed_ms(start) : 0.0;
                r.rel_err = (it.theta - truth).norm() / truth_norm;
                const Matrix theta_mat = Eigen::Map<const Matrix>(it.theta.data(), p, p);
                const Eigen::LLT<Matrix> llt(theta_mat);
                double logdet = 0.0;
                if (llt.info() == Eigen::Success) {
                    logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
                }
                r.objective = (sigma_star * theta_mat).trace() - logdet +
                              it.lambda * it.theta.lpNorm<1>();
                r.radius = it.radius;
                rows.push_back(r);
            };
            solved = r1::reason1_solve(setup.problem, oracle, setup.rcfg, recorder);
            summary.final_err = (solved.theta_hat - truth).norm() / truth_norm;
            const Matrix estimate =
                Eigen::Map<const Matrix>(solved.theta_hat.data(), p, p);
            summary.ggm_f1 = ggm_support_f1(estimate, theta_star_mat);
        }
        summary.checkpoints = extract_checkpoints(rows, &TrajectoryRecord::rel_err);
        summary.epochs_completed = solved.epochs_completed;
        summary.total_iterations = solved.total_iterations;
        if (cfg.debug) summary.debug_violations = solved.debug.total_violations();
    } else {
        DecomposeSetup setup = build_decompose(cfg);
        const auto& inst = setup.stream.instance();
        const Matrix m_star = inst.m_star();
        const double m_norm = m_star.norm();
        const double s_norm = inst.s_star.norm();
        const double l_norm = inst.l_star.norm();
        auto recorder = [&](const r2::IterationView2& it) {
            TrajectoryRecord r;
            r.iter = it.iter;
            r.epoch = it.epoch;
            r.wall_ms = cfg.timing ? elapsed_ms(start) : 0.0;
            r.err_recon = (m_star - it.s - it.l).norm() / m_norm;
            r.err_s = (it.s - inst.s_star).norm() / s_norm;
            r.err_l = l_norm > 0.0 ? (it.l - inst.l_star).norm() / l_norm
                                   : (it.l - inst.l_star).norm();
            r.radius = it.radius_s;
            rows.push_back(r);
        };
        r2::Reason2Result solved;
        if (cfg.direct_obs) {
            loss::DirectObservationOracle oracle(setup.stream.clone_at(0));
            solved = r2::reason2_solve(setup.problem, oracle, setup.rcfg, recorder);
        } else {
            loss::MatrixSquareOracle oracle(setup.stream.clone_at(0));
            solved = r2::reason2_solve(setup.problem, oracle, setup.rcfg, recorder);
        }
        summary.final_err_s = (solved.s_hat - inst.s_star).norm() / s_norm;
        summary.final_err_l = l_norm > 0.0 ? (solved.l_hat - inst.l_star).norm() / l_norm
                                           : (solved.l_hat - inst.l_star).norm();
        summary.final_err_recon = (m_star - solved.s_hat - solved.l_hat).norm() / m_norm;
        summary.final_err = summary.final_err_s;
        summary.checkpoints = extract_checkpoints(rows, &TrajectoryRecord::err_s);
        summary.checkpoints_recon = extract_checkpoints(rows, &TrajectoryRecord::err_recon);
        summary.checkpoints_l = extract_checkpoints(rows, &TrajectoryRecord::err_l);
        summary.epochs_completed = solved.epochs_completed;
        summary.total_iterations = solved.total_iterations;
        if (cfg.debug) summary.debug_violations = solved.debug.total_violations();
    }

    summary.total_wall_ms = elapsed_ms(start);

    RunManifest manifest;
    manifest.config = cfg;
    manifest.revision = revision_string();
    manifest.summary = summary;

    if (!cfg.out_dir.empty()) {
        try {
            fs::create_directories(cfg.out_dir);
        } catch (const fs::filesystem_error& e) {
            throw IoError(std::string("cannot create output directory: ") + e.what());
        }
        const std::string csv_path =
            (fs::path(cfg.out_dir) / (cfg.run_tag + "_trajectory.csv")).string();
        const std::string manifest_path =
            (fs::path(cfg.out_dir) / (cfg.run_tag + "_manifest.json")).string();
        write_trajectory_csv(csv_path, cfg.kind, rows);
        manifest.outputs = {csv_path, manifest_path};
        std::ofstream mout(manifest_path, std::ios::binary);
        if (!mout) throw IoError("cannot write " + manifest_path);
        mout << manifest_to_json(manifest);
        if (!mout) throw IoError("failed while writing " + manifest_path);
    }

    result.manifest = manifest;
    return result;
}

ComparisonResult compare_solvers(const ExperimentConfig& base,
                                 const std::vector<SolverKind>& variants) {
    if (variants.size() < 2)
        throw std::invalid_argument("compare_solvers: need at least two variants");
    ComparisonResult result;
    for (const SolverKind solver : variants) {
        ExperimentConfig cfg = base;
        cfg.solver = solver;
        cfg.run_tag = (base.run_tag.empty() ? default_tag(base) : base.run_tag) + "_" +
                      to_string(solver);
        const RunResult run = run_experiment(cfg);
        ComparisonRow row;
        row.solver = solver;
        row.checkpoints = run.manifest.summary.checkpoints;
        row.final_err = run.manifest.summary.final_err;
        row.final_err_s = run.manifest.summary.final_err_s;
        row.final_err_l = run.manifest.summary.final_err_l;
        row.final_err_recon = run.manifest.summary.final_err_recon;
        result.rows.push_back(row);
        result.manifests.push_back(run.manifest);
    }

    if (!base.out_dir.empty()) {
        const std::string path =
            (fs::path(base.out_dir) /
             ((base.run_tag.empty() ? default_tag(base) : base.run_tag) + "_compare.csv"))
                .string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path);
        out << "solver,e002T,e02T,eT,final_err,final_err_S,final_err_L,final_err_recon\n";
        for (const auto& row : result.rows)
            out << to_string(row.solver) << ',' << format_double(row.checkpoints.e002T)
                << ',' << format_double(row.checkpoints.e02T) << ','
                << format_double(row.checkpoints.eT) << ',' << format_double(row.final_err)
                << ',' << format_double(row.final_err_s) << ','
                << format_double(row.final_err_l) << ','
                << format_double(row.final_err_recon) << '\n';
    }
    return result;
}

RateFit fit_rate(const std::vector<RatePoint>& points) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_rate: need at least three dimensions");
    std::vector<double> xs, ys;
    for (const auto& pt : points) {
        if (pt.dim <= 1.0 || pt.sparsity < 1 || pt.final_sq_error <= 0.0)
            throw std::invalid_argument("fit_rate: bad rate point");
        xs.push_back(std::log(pt.sparsity * std::log(pt.dim)));
        ys.push_back(std::log(pt.final_sq_error));
    }
    const double n = static_cast<double>(xs.size());
    const double mean_x = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_rate: degenerate sweep (single x value)");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    for (std::size_t i = 0; i < xs.size(); ++i)
        fit.residuals.push_back(ys[i] - (fit.intercept + fit.slope * xs[i]));
    return fit;
}

RateReport rate_sweep(const ExperimentConfig& base, const std::vector<int>& dims,
                      const std::vector<int>& sparsities, int num_seeds) {
    if (dims.size() != sparsities.size())
        throw std::invalid_argument("rate_sweep: dims and sparsities must align");
    if (num_seeds < 1) throw std::invalid_argument("rate_sweep: need at least one seed");
    RateReport report;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        std::vector<double> sq_errors;
        for (int s = 0; s < num_seeds; ++s) {
            ExperimentConfig cfg = base;
            cfg.kind = ExperimentKind::Sparse;
            cfg.solver = SolverKind::Reason1;
            cfg.dim = dims[i];
            cfg.sparsity = sparsities[i];
            cfg.seed = base.seed + static_cast<std::uint64_t>(s);
            cfg.out_dir.clear();
            // Auto-derived fields re-resolve per dimension; explicit settings
            // carry across the sweep unchanged.
            const RunResult run = run_experiment(cfg);
            // Absolute squared l2 error; |theta*|_2^2 = s for unit spikes.
            const double rel = run.manifest.summary.final_err;
            sq_errors.push_back(rel * rel * sparsities[i]);
        }
        std::sort(sq_errors.begin(), sq_errors.end());
        const double median = sq_errors[sq_errors.size() / 2];
        report.points.push_back(RatePoint{static_cast<double>(dims[i]), sparsities[i], median});
    }
    report.fit = fit_rate(report.points);
    return report;
}

}  // namespace reason::harness
