#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "afp/async_harness.hpp"
#include "afp/problem_zoo.hpp"

namespace afp {

// Schema-validated experiment description (one JSON document).  Unknown keys
// are rejected; every default is visible through dump_config().
struct ExperimentConfig {
    struct Problem {
        std::string kind = "quadratic";  // quadratic | game
        int m = 5;                       // game grid side
        int n = 100;                     // components / observations
        double theta_decay = 0.8;
        double noise_var = 0.05;
        double cond = 100.0;
        int p = 50;
    } problem;

    struct Solver {
        double s = 1.1;
        double gamma = 1.0;
        int tau = 0;
        std::string eta_mode = "heuristic";  // heuristic | theory
        double eta = 0.0;                    // 0 = default 1/(1+tau)
        long k_max = 10000;
        double eps_rel = 0.0;
        int stride = 0;
    } solver;

    struct Oracle {
        std::string kind = "exact";  // exact|delayed|minibatch_delayed|incremental|shuffling|random_m
        int m = 1;                   // random_m batch
        double r_scale = 0.01;
        int b_min = 5;
        std::string delay_model = "uniform";  // uniform | fixed
        int fixed_d = 0;
        bool monitor = false;
    } oracle;

    struct Output {
        std::string dir;  // empty -> AFP_OUT_DIR env -> "."
        int stride = 1;
    } output;

    std::uint64_t seed = 1;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::filesystem::path& path);
    // Dotted override, e.g. "solver.eta=0.25".
    void apply_override(const std::string& key_eq_value);
    std::string to_json_text() const;
    void validate() const;  // throws std::invalid_argument naming the field path
};

struct RunResult {
    Trace trace;
    EventLog log;
    double final_res_rel = 0.0;
    double final_res_abs = 0.0;
    long iterations = 0;
    double full_passes = 0.0;
    bool converged = false;
    double slope = 0.0;  // rate_slope over the last decade when computable
    double duality_gap = -1.0;  // game runs only
};

struct BuiltProblem {
    std::unique_ptr<OperatorHandle> op;
    std::shared_ptr<const GameInstance> game;  // null for the quadratic
    Vec y0;
};

BuiltProblem build_problem(const ExperimentConfig& cfg);
SolverConfig build_solver_config(const ExperimentConfig& cfg, const OperatorHandle& op);

RunResult run_experiment(const ExperimentConfig& cfg);

struct SweepRow {
    int tau = 0;
    long K = 0;  // iterations to eps (-1 if not reached)
    double passes = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    FitResult fit;
    bool fitted = false;
};

// One run per tau with the per-tau stepsize (heuristic default or explicit
// eta rescaled by (1+tau_base)/(1+tau)); duplicate taus are deduplicated.
SweepResult sweep_tau(const ExperimentConfig& base, const std::vector<int>& taus, double eps_rel);

void write_trace_csv(std::ostream& os, const Trace& trace);
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);
void write_summary(const std::filesystem::path& path, const ExperimentConfig& cfg,
                   const RunResult& result);
void write_svg(const std::filesystem::path& path, const Trace& trace);

// Output directory resolution: --out flag > config output.dir > AFP_OUT_DIR > cwd.
std::filesystem::path resolve_out_dir(const std::string& flag_dir, const ExperimentConfig& cfg);

struct CheckResult {
    std::string module;
    std::string name;
    bool passed = false;
    std::string witness;
};

// Property suite behind `validate`: audits, monitors, bound checks, the
// projection oracle, staleness caps.
std::vector<CheckResult> validate_suite();

}  // namespace afp
