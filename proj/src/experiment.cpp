#include "afp/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "afp/diagnostics.hpp"

namespace afp {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
    throw std::invalid_argument("config field '" + path + "': " + why);
}

void reject_unknown(const json& j, const std::string& prefix,
                    const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            bad_field(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown key");
}

template <typename T>
void load(const json& j, const char* key, const std::string& prefix, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        bad_field(prefix + "." + key, "wrong type");
    }
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config root must be a JSON object");
    reject_unknown(j, "", {"problem", "solver", "oracle", "output", "seed"});

    ExperimentConfig cfg;
    if (j.contains("problem")) {
        const json& p = j["problem"];
        reject_unknown(p, "problem", {"kind", "m", "n", "theta_decay", "noise_var", "cond", "p"});
        load(p, "kind", "problem", cfg.problem.kind);
        load(p, "m", "problem", cfg.problem.m);
        load(p, "n", "problem", cfg.problem.n);
        load(p, "theta_decay", "problem", cfg.problem.theta_decay);
        load(p, "noise_var", "problem", cfg.problem.noise_var);
        load(p, "cond", "problem", cfg.problem.cond);
        load(p, "p", "problem", cfg.problem.p);
    }
    if (!j.contains("solver") || !j["solver"].contains("s"))
        bad_field("solver.s", "required field is missing");
    {
        const json& s = j["solver"];
        reject_unknown(s, "solver",
                       {"s", "gamma", "tau", "eta_mode", "eta", "k_max", "eps_rel", "stride"});
        load(s, "s", "solver", cfg.solver.s);
        load(s, "gamma", "solver", cfg.solver.gamma);
        load(s, "tau", "solver", cfg.solver.tau);
        load(s, "eta_mode", "solver", cfg.solver.eta_mode);
        load(s, "eta", "solver", cfg.solver.eta);
        load(s, "k_max", "solver", cfg.solver.k_max);
        load(s, "eps_rel", "solver", cfg.solver.eps_rel);
        load(s, "stride", "solver", cfg.solver.stride);
    }
    if (j.contains("oracle")) {
        const json& o = j["oracle"];
        reject_unknown(o, "oracle",
                       {"kind", "m", "r_scale", "b_min", "delay_model", "fixed_d", "monitor"});
        load(o, "kind", "oracle", cfg.oracle.kind);
        load(o, "m", "oracle", cfg.oracle.m);
        load(o, "r_scale", "oracle", cfg.oracle.r_scale);
        load(o, "b_min", "oracle", cfg.oracle.b_min);
        load(o, "delay_model", "oracle", cfg.oracle.delay_model);
        load(o, "fixed_d", "oracle", cfg.oracle.fixed_d);
        load(o, "monitor", "oracle", cfg.oracle.monitor);
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        reject_unknown(o, "output", {"dir", "stride"});
        load(o, "dir", "output", cfg.output.dir);
        load(o, "stride", "output", cfg.output.stride);
    }
    load(j, "seed", "", cfg.seed);
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void ExperimentConfig::apply_override(const std::string& key_eq_value) {
    auto eq = key_eq_value.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must look like key.path=value: " + key_eq_value);
    const std::string key = key_eq_value.substr(0, eq);
    const std::string value = key_eq_value.substr(eq + 1);

    auto as_double = [&] { return std::stod(value); };
    auto as_int = [&] { return std::stoi(value); };
    auto as_long = [&] { return std::stol(value); };

    try {
        if (key == "problem.kind") problem.kind = value;
        else if (key == "problem.m") problem.m = as_int();
        else if (key == "problem.n") problem.n = as_int();
        else if (key == "problem.theta_decay") problem.theta_decay = as_double();
        else if (key == "problem.noise_var") problem.noise_var = as_double();
        else if (key == "problem.cond") problem.cond = as_double();
        else if (key == "problem.p") problem.p = as_int();
        else if (key == "solver.s") solver.s = as_double();
        else if (key == "solver.gamma") solver.gamma = as_double();
        else if (key == "solver.tau") solver.tau = as_int();
        else if (key == "solver.eta_mode") solver.eta_mode = value;
        else if (key == "solver.eta") solver.eta = as_double();
        else if (key == "solver.k_max") solver.k_max = as_long();
        else if (key == "solver.eps_rel") solver.eps_rel = as_double();
        else if (key == "solver.stride") solver.stride = as_int();
        else if (key == "oracle.kind") oracle.kind = value;
        else if (key == "oracle.m") oracle.m = as_int();
        else if (key == "oracle.r_scale") oracle.r_scale = as_double();
        else if (key == "oracle.b_min") oracle.b_min = as_int();
        else if (key == "oracle.delay_model") oracle.delay_model = value;
        else if (key == "oracle.fixed_d") oracle.fixed_d = as_int();
        else if (key == "oracle.monitor") oracle.monitor = value == "true" || value == "1";
        else if (key == "output.dir") output.dir = value;
        else if (key == "output.stride") output.stride = as_int();
        else if (key == "seed") seed = static_cast<std::uint64_t>(as_long());
        else bad_field(key, "unknown key");
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        bad_field(key, "cannot parse value '" + value + "'");
    }
    validate();
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["problem"] = {{"kind", problem.kind},          {"m", problem.m},
                    {"n", problem.n},                {"theta_decay", problem.theta_decay},
                    {"noise_var", problem.noise_var}, {"cond", problem.cond},
                    {"p", problem.p}};
    j["solver"] = {{"s", solver.s},           {"gamma", solver.gamma},
                   {"tau", solver.tau},       {"eta_mode", solver.eta_mode},
                   {"eta", solver.eta},       {"k_max", solver.k_max},
                   {"eps_rel", solver.eps_rel}, {"stride", solver.stride}};
    j["oracle"] = {{"kind", oracle.kind},       {"m", oracle.m},
                   {"r_scale", oracle.r_scale}, {"b_min", oracle.b_min},
                   {"delay_model", oracle.delay_model},
                   {"fixed_d", oracle.fixed_d}, {"monitor", oracle.monitor}};
    j["output"] = {{"dir", output.dir}, {"stride", output.stride}};
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

void ExperimentConfig::validate() const {
    if (problem.kind != "quadratic" && problem.kind != "game")
        bad_field("problem.kind", "must be 'quadratic' or 'game'");
    if (problem.m < 1) bad_field("problem.m", "must be >= 1");
    if (problem.n < 1) bad_field("problem.n", "must be >= 1");
    if (problem.cond < 1.0) bad_field("problem.cond", "must be >= 1");
    if (problem.p < 1) bad_field("problem.p", "must be >= 1");
    if (problem.noise_var < 0.0) bad_field("problem.noise_var", "must be >= 0");
    if (!(solver.s > 1.0)) bad_field("solver.s", "must be > 1");
    if (solver.gamma < 0.0 || solver.gamma > 1.0) bad_field("solver.gamma", "must be in [0,1]");
    if (solver.tau < 0) bad_field("solver.tau", "must be >= 0");
    if (solver.eta_mode != "heuristic" && solver.eta_mode != "theory")
        bad_field("solver.eta_mode", "must be 'heuristic' or 'theory'");
    if (solver.eta_mode == "theory" && solver.s < 1.0 + 3.0 * solver.gamma)
        bad_field("solver.s", "theory mode requires s >= 1 + 3*gamma");
    if (solver.eta < 0.0) bad_field("solver.eta", "must be >= 0");
    if (solver.k_max < 0) bad_field("solver.k_max", "must be >= 0");
    if (solver.eps_rel < 0.0) bad_field("solver.eps_rel", "must be >= 0");
    static const std::set<std::string> kinds = {"exact",       "delayed",  "minibatch_delayed",
                                                "incremental", "shuffling", "random_m"};
    if (!kinds.count(oracle.kind)) bad_field("oracle.kind", "unknown oracle kind");
    if (oracle.kind != "exact" && solver.tau < 1)
        bad_field("solver.tau", "must be >= 1 with a delayed oracle");
    if (oracle.m < 1) bad_field("oracle.m", "must be >= 1");
    if (!(oracle.r_scale > 0.0)) bad_field("oracle.r_scale", "must be > 0");
    if (oracle.b_min < 1) bad_field("oracle.b_min", "must be >= 1");
    if (oracle.delay_model != "uniform" && oracle.delay_model != "fixed")
        bad_field("oracle.delay_model", "must be 'uniform' or 'fixed'");
    if (output.stride < 0) bad_field("output.stride", "must be >= 0");
}

BuiltProblem build_problem(const ExperimentConfig& cfg) {
    BuiltProblem built;
    if (cfg.problem.kind == "quadratic") {
        built.op = std::make_unique<OperatorHandle>(
            quadratic_finitesum(cfg.problem.p, cfg.problem.n, cfg.problem.cond, cfg.seed));
        built.y0 = Vec(static_cast<std::size_t>(cfg.problem.p), 1.0);
    } else {
        auto game = std::make_shared<GameInstance>(
            generate_game(cfg.problem.m, cfg.problem.n, cfg.problem.theta_decay,
                          cfg.problem.noise_var, cfg.seed));
        built.op = std::make_unique<OperatorHandle>(bfs_operator(game));
        built.game = game;
        built.y0.assign(static_cast<std::size_t>(game->p1 + game->p2), 0.0);
        for (int i = 0; i < game->p1; ++i) built.y0[static_cast<std::size_t>(i)] = 1.0 / game->p1;
        for (int i = 0; i < game->p2; ++i)
            built.y0[static_cast<std::size_t>(game->p1 + i)] = 1.0 / game->p2;
    }
    return built;
}

SolverConfig build_solver_config(const ExperimentConfig& cfg, const OperatorHandle& op) {
    SolverConfig sc;
    sc.s = cfg.solver.s;
    sc.gamma = cfg.solver.gamma;
    sc.tau = cfg.solver.tau;
    sc.eta_mode = cfg.solver.eta_mode == "theory" ? EtaMode::Theory : EtaMode::Heuristic;
    sc.eta = cfg.solver.eta;
    sc.k_max = cfg.solver.k_max;
    sc.eps_rel = cfg.solver.eps_rel;
    sc.seed = cfg.seed;
    sc.log_stride = cfg.solver.stride;
    // Theory-mode constants by oracle variant: consistent delays and the
    // stochastic estimator use (kappa=1, Theta=tau); aggregated inconsistent
    // strategies use (kappa=1, Theta_hat=tau_cap).
    sc.bound.kappa = 1.0;
    if (cfg.oracle.kind == "incremental" || cfg.oracle.kind == "shuffling" ||
        cfg.oracle.kind == "random_m") {
        sc.bound.Theta = 0.0;
        sc.bound.Theta_hat = sc.tau;
    } else {
        sc.bound.Theta = sc.tau;
        sc.bound.Theta_hat = 0.0;
    }
    (void)op;
    return sc;
}

namespace {

std::unique_ptr<OracleStrategy> build_oracle(const ExperimentConfig& cfg) {
    if (cfg.oracle.kind == "exact") return std::make_unique<ExactOracle>();
    if (cfg.oracle.kind == "delayed") {
        DelayModel model;
        model.kind = cfg.oracle.delay_model == "fixed" ? DelayModel::Kind::Fixed
                                                       : DelayModel::Kind::Uniform;
        model.fixed_d = cfg.oracle.fixed_d;
        model.tau_cap = cfg.solver.tau;
        model.seed = cfg.seed ^ 0x9e3779b97f4a7c15ull;
        return std::make_unique<ConsistentDelayedOracle>(model, cfg.solver.tau,
                                                         cfg.oracle.monitor);
    }
    if (cfg.oracle.kind == "minibatch_delayed")
        return std::make_unique<MinibatchDelayedOracle>(cfg.solver.tau, cfg.oracle.r_scale,
                                                        cfg.oracle.b_min,
                                                        cfg.seed ^ 0xda3e39cb94b95bdbull);
    PickStrategy strategy = cfg.oracle.kind == "incremental" ? PickStrategy::Incremental
                            : cfg.oracle.kind == "shuffling" ? PickStrategy::Shuffling
                                                             : PickStrategy::RandomM;
    int tau_cap = cfg.oracle.kind == "random_m" ? cfg.solver.tau : -1;
    return std::make_unique<AggregatedOracle>(strategy, cfg.oracle.m, tau_cap,
                                              cfg.seed ^ 0xc2b2ae3d27d4eb4full,
                                              cfg.oracle.monitor);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    BuiltProblem built = build_problem(cfg);
    SolverConfig sc = build_solver_config(cfg, *built.op);
    auto oracle = build_oracle(cfg);

    RunResult result;
    result.trace = run(*built.op, *oracle, sc, built.y0);
    result.converged = result.trace.converged;
    result.iterations = result.trace.iterations;
    result.full_passes = built.op->full_passes();
    if (!result.trace.rows.empty()) {
        const auto& last = result.trace.rows.back();
        result.final_res_abs = last.res_abs;
        result.final_res_rel = last.res_rel;
    }
    try {
        long hi = result.iterations, lo = std::max<long>(hi / 10, 1);
        result.slope = rate_slope(result.trace, lo, hi, cfg.solver.tau).slope;
    } catch (const std::invalid_argument&) {
        result.slope = 0.0;  // not enough points; reported as absent downstream
    }
    if (built.game && !result.trace.final_y.empty()) {
        const auto& g = *built.game;
        Vec uv(result.trace.final_y.begin(), result.trace.final_y.begin() + g.p1);
        Vec uw(result.trace.final_y.begin() + g.p1, result.trace.final_y.end());
        result.duality_gap = duality_gap(g.L, simplex_project(uv), simplex_project(uw));
    }
    return result;
}

SweepResult sweep_tau(const ExperimentConfig& base, const std::vector<int>& taus,
                      double eps_rel) {
    if (taus.size() < 1) throw std::invalid_argument("sweep_tau: need at least one tau");
    std::vector<int> uniq = taus;
    std::sort(uniq.begin(), uniq.end());
    auto it = std::unique(uniq.begin(), uniq.end());
    if (it != uniq.end()) {
        std::fprintf(stderr, "sweep_tau: duplicate tau values deduplicated\n");
        uniq.erase(it, uniq.end());
    }

    SweepResult result;
    std::vector<std::pair<int, long>> pairs;
    for (int tau : uniq) {
        ExperimentConfig cfg = base;
        cfg.solver.tau = tau;
        cfg.solver.eps_rel = eps_rel;
        cfg.oracle.kind = tau == 0 ? "exact" : base.oracle.kind;
        if (cfg.solver.eta > 0.0 && cfg.solver.eta_mode == "heuristic")
            cfg.solver.eta = base.solver.eta * (1.0 + base.solver.tau) / (1.0 + tau);
        RunResult run_result = run_experiment(cfg);
        long K = run_result.converged ? run_result.iterations : -1;
        result.rows.push_back(SweepRow{tau, K, run_result.full_passes});
        if (K >= 0) pairs.emplace_back(tau, K);
    }
    if (pairs.size() >= 5) {
        result.fit = tau_sweep_fit(pairs);
        result.fitted = true;
    }
    return result;
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
    os << "k,t_k,eta_k,res_abs,res_rel,tau_used,full_passes,monitor_slack,seed\n";
    for (const auto& r : trace.rows) {
        os << r.k << ',' << fmt17(r.t_k) << ',' << fmt17(r.eta_k) << ',' << fmt17(r.res_abs)
           << ',' << fmt17(r.res_rel) << ',' << r.tau_used << ',' << fmt17(r.full_passes)
           << ',';
        if (r.monitor_slack) os << fmt17(*r.monitor_slack);
        os << ',' << r.seed << '\n';
    }
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_trace_csv(out, trace);
}

void write_summary(const std::filesystem::path& path, const ExperimentConfig& cfg,
                   const RunResult& result) {
    json j;
    j["final_res_abs"] = result.final_res_abs;
    j["final_res_rel"] = result.final_res_rel;
    j["iterations"] = result.iterations;
    j["full_passes"] = result.full_passes;
    j["converged"] = result.converged;
    j["slope"] = result.slope;
    if (result.duality_gap >= 0.0) j["duality_gap"] = result.duality_gap;
    j["seed"] = cfg.seed;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_svg(const std::filesystem::path& path, const Trace& trace) {
    const double W = 640, H = 480, ML = 60, MR = 20, MT = 20, MB = 50;
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : trace.rows)
        if (r.res_rel > 0.0 && r.full_passes > 0.0)
            pts.emplace_back(std::log10(r.full_passes), std::log10(r.res_rel));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    if (pts.size() >= 2) {
        double x0 = pts.front().first, x1 = pts.back().first;
        double ylo = pts[0].second, yhi = pts[0].second;
        for (auto& p : pts) ylo = std::min(ylo, p.second), yhi = std::max(yhi, p.second);
        if (x1 <= x0) x1 = x0 + 1;
        if (yhi <= ylo) yhi = ylo + 1;
        out << "<polyline fill='none' stroke='#1f6fb2' stroke-width='1.5' points='";
        for (auto& p : pts) {
            double px = ML + (p.first - x0) / (x1 - x0) * (W - ML - MR);
            double py = MT + (yhi - p.second) / (yhi - ylo) * (H - MT - MB);
            out << px << ',' << py << ' ';
        }
        out << "'/>\n";
    }
    out << "<text x='" << W / 2 << "' y='" << H - 12
        << "' text-anchor='middle' font-size='13'>log10 full passes</text>\n"
        << "<text x='16' y='" << H / 2
        << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 " << H / 2
        << ")'>log10 relative residual</text>\n</svg>\n";
}

std::filesystem::path resolve_out_dir(const std::string& flag_dir, const ExperimentConfig& cfg) {
    if (!flag_dir.empty()) return flag_dir;
    if (!cfg.output.dir.empty()) return cfg.output.dir;
    if (const char* env = std::getenv("AFP_OUT_DIR"); env && *env) return env;
    return ".";
}

}  // namespace afp
