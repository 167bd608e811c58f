#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "afp/experiment.hpp"

namespace fs = std::filesystem;

namespace {

afp::ExperimentConfig load_config(const std::string& path,
                                  const std::vector<std::string>& overrides,
                                  long seed_flag) {
    afp::ExperimentConfig cfg = afp::ExperimentConfig::from_file(path);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (seed_flag >= 0) cfg.seed = static_cast<std::uint64_t>(seed_flag);
    cfg.validate();
    return cfg;
}

int cmd_run(const std::string& config_path, const std::string& out_flag,
            const std::vector<std::string>& overrides, long seed_flag) {
    afp::ExperimentConfig cfg = load_config(config_path, overrides, seed_flag);
    fs::path dir = afp::resolve_out_dir(out_flag, cfg);
    fs::create_directories(dir);
    afp::RunResult result = afp::run_experiment(cfg);
    afp::write_trace_csv(dir / "trace.csv", result.trace);
    afp::write_summary(dir / "summary.json", cfg, result);
    afp::write_svg(dir / "residual.svg", result.trace);
    std::cout << "run: k=" << result.iterations << " passes=" << result.full_passes
              << " res_rel=" << result.final_res_rel
              << (result.converged ? " converged" : "") << "\n"
              << "outputs in " << dir.string() << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_flag,
              const std::vector<std::string>& overrides, long seed_flag,
              std::vector<int> taus, double eps) {
    afp::ExperimentConfig cfg = load_config(config_path, overrides, seed_flag);
    if (cfg.oracle.kind == "exact") cfg.oracle.kind = "delayed";
    fs::path dir = afp::resolve_out_dir(out_flag, cfg);
    fs::create_directories(dir);
    afp::SweepResult sweep = afp::sweep_tau(cfg, taus, eps);

    std::ofstream out(dir / "sweep.csv", std::ios::binary);
    out << "tau,K,passes\n";
    for (const auto& row : sweep.rows)
        out << row.tau << ',' << row.K << ',' << row.passes << '\n';
    if (sweep.fitted)
        out << "# fit slope=" << sweep.fit.slope << " intercept=" << sweep.fit.intercept
            << " r2=" << sweep.fit.r2 << '\n';
    for (const auto& row : sweep.rows)
        std::cout << "tau=" << row.tau << " K=" << row.K << " passes=" << row.passes << "\n";
    if (sweep.fitted)
        std::cout << "fit: K = " << sweep.fit.slope << " * tau + " << sweep.fit.intercept
                  << "  (R^2 = " << sweep.fit.r2 << ")\n";
    return 0;
}

int cmd_validate() {
    auto results = afp::validate_suite();
    bool all = true;
    for (const auto& r : results) {
        std::printf("%-6s %-14s %-32s %s\n", r.passed ? "PASS" : "FAIL", r.module.c_str(),
                    r.name.c_str(), r.witness.c_str());
        if (!r.passed && all) {
            all = false;
            std::printf("first failure: %s / %s (%s)\n", r.module.c_str(), r.name.c_str(),
                        r.witness.c_str());
        }
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AFP solver experiment front end"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    long seed_flag = -1;
    std::vector<int> taus;
    double eps = 1e-3;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", config_path, "JSON experiment config");
        if (config_required) c->required();
        sub->add_option("--out", out_dir, "output directory (falls back to AFP_OUT_DIR)");
        sub->add_option("--seed", seed_flag, "override config seed");
        sub->add_option("--set", overrides, "dotted override, e.g. solver.eta=0.25");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
    add_common(run_cmd, true);
    CLI::App* sweep_cmd = app.add_subcommand("sweep-tau", "iterations-to-eps vs tau sweep");
    add_common(sweep_cmd, true);
    sweep_cmd->add_option("--tau", taus, "tau values")->required()->expected(-1);
    sweep_cmd->add_option("--eps", eps, "relative-residual target");
    CLI::App* validate_cmd = app.add_subcommand("validate", "run the property suite");
    CLI::App* dump_cmd = app.add_subcommand("dump-config", "print the fully defaulted config");
    add_common(dump_cmd, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, out_dir, overrides, seed_flag);
        if (sweep_cmd->parsed())
            return cmd_sweep(config_path, out_dir, overrides, seed_flag, taus, eps);
        if (validate_cmd->parsed()) return cmd_validate();
        if (dump_cmd->parsed()) {
            afp::ExperimentConfig cfg;
            if (!config_path.empty()) cfg = load_config(config_path, overrides, seed_flag);
            std::cout << cfg.to_json_text();
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
