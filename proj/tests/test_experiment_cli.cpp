#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "afp/experiment.hpp"

using namespace afp;
namespace fs = std::filesystem;

namespace {

fs::path make_tmp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("afp_cli_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(AFP_CLI_PATH) + " " + args;
    int ret = std::system(cmd.c_str());
#ifdef _WIN32
    return ret;
#else
    return (ret >= 0 && (ret & 0x7f) == 0) ? (ret >> 8) & 0xff : -1;
#endif
}

const char* kSmallConfig = R"({
  "problem": {"kind": "quadratic", "p": 10, "n": 4, "cond": 20.0},
  "solver": {"s": 1.1, "tau": 3, "k_max": 200},
  "oracle": {"kind": "delayed"},
  "seed": 7
})";

}  // namespace

TEST_CASE("config parsing: defaults and round trip") {
    ExperimentConfig cfg = ExperimentConfig::from_json_text(R"({"solver": {"s": 2.0}})");
    CHECK(cfg.solver.s == 2.0);
    CHECK(cfg.solver.gamma == 1.0);
    CHECK(cfg.problem.kind == "quadratic");
    CHECK(cfg.oracle.kind == "exact");
    CHECK(cfg.seed == 1);

    ExperimentConfig back = ExperimentConfig::from_json_text(cfg.to_json_text());
    CHECK(back.to_json_text() == cfg.to_json_text());
}

TEST_CASE("config parsing: unknown keys and missing solver.s name the field") {
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json_text(R"({"solver": {"s": 2, "x": 1}})"),
                         doctest::Contains("solver.x"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json_text(R"({"solver": {"tau": 3}})"),
                         doctest::Contains("solver.s"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json_text(R"({"bogus": {}})"),
                         doctest::Contains("bogus"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json_text(R"({"solver": {"s": "two"}})"),
                         doctest::Contains("solver.s"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text("not json"), std::invalid_argument);
}

TEST_CASE("config validation: range errors carry the field path") {
    CHECK_THROWS_WITH_AS(
        ExperimentConfig::from_json_text(R"({"solver": {"s": 2, "gamma": 1.5}})"),
        doctest::Contains("solver.gamma"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        ExperimentConfig::from_json_text(
            R"({"solver": {"s": 2, "eta_mode": "theory", "gamma": 1.0}})"),
        doctest::Contains("solver.s"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        ExperimentConfig::from_json_text(
            R"({"solver": {"s": 2, "tau": 0}, "oracle": {"kind": "delayed"}})"),
        doctest::Contains("solver.tau"), std::invalid_argument);
}

TEST_CASE("apply_override: dotted keys") {
    ExperimentConfig cfg = ExperimentConfig::from_json_text(R"({"solver": {"s": 2.0}})");
    cfg.apply_override("solver.eta=0.25");
    CHECK(cfg.solver.eta == 0.25);
    cfg.apply_override("problem.kind=game");
    CHECK(cfg.problem.kind == "game");
    cfg.apply_override("seed=42");
    CHECK(cfg.seed == 42);
    CHECK_THROWS_WITH_AS(cfg.apply_override("solver.nope=1"), doctest::Contains("solver.nope"),
                         std::invalid_argument);
    CHECK_THROWS_AS(cfg.apply_override("solver.eta"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.apply_override("solver.eta=abc"), std::invalid_argument);
}

TEST_CASE("run_experiment: default quadratic converges") {
    ExperimentConfig cfg = ExperimentConfig::from_json_text(
        R"({"problem": {"p": 20, "n": 4}, "solver": {"s": 1.1, "k_max": 20000, "eps_rel": 1e-6}})");
    RunResult result = run_experiment(cfg);
    CHECK(result.converged);
    CHECK(result.final_res_rel <= 1e-6);
    CHECK(result.full_passes > 0.0);
}

TEST_CASE("sweep_tau: single tau gives one row and no fit; duplicates deduplicated") {
    ExperimentConfig cfg = ExperimentConfig::from_json_text(kSmallConfig);
    cfg.solver.k_max = 3000;
    SweepResult single = sweep_tau(cfg, {0}, 1e-2);
    CHECK(single.rows.size() == 1);
    CHECK_FALSE(single.fitted);

    SweepResult dup = sweep_tau(cfg, {2, 2, 4}, 1e-2);
    CHECK(dup.rows.size() == 2);
    CHECK(dup.rows[0].tau == 2);
    CHECK(dup.rows[1].tau == 4);
}

TEST_CASE("trace csv format") {
    Trace trace;
    TraceRecord row;
    row.k = 0;
    row.t_k = 13.3;
    row.eta_k = 0.05;
    row.res_abs = 1.0;
    row.res_rel = 1.0;
    row.full_passes = 1.0;
    row.seed = 9;
    trace.rows.push_back(row);
    row.k = 1;
    row.monitor_slack = 0.5;
    trace.rows.push_back(row);
    std::ostringstream os;
    write_trace_csv(os, trace);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "k,t_k,eta_k,res_abs,res_rel,tau_used,full_passes,monitor_slack,seed");
    std::getline(is, line);
    CHECK(line == "0,13.300000000000001,0.050000000000000003,1,1,0,1,,9");
    std::getline(is, line);
    CHECK(line == "1,13.300000000000001,0.050000000000000003,1,1,0,1,0.5,9");
}

TEST_CASE("resolve_out_dir precedence") {
    ExperimentConfig cfg;
    cfg.output.dir = "from_config";
    CHECK(resolve_out_dir("from_flag", cfg) == fs::path("from_flag"));
    CHECK(resolve_out_dir("", cfg) == fs::path("from_config"));
    cfg.output.dir.clear();
#ifndef _WIN32
    setenv("AFP_OUT_DIR", "from_env", 1);
    CHECK(resolve_out_dir("", cfg) == fs::path("from_env"));
    unsetenv("AFP_OUT_DIR");
#endif
    CHECK(resolve_out_dir("", cfg) == fs::path("."));
}

TEST_CASE("cli run: outputs, determinism, and k_max=0") {
    fs::path dir = make_tmp_dir("run");
    spit(dir / "cfg.json", kSmallConfig);

    int rc1 = run_cli("run --config " + (dir / "cfg.json").string() + " --out " +
                      (dir / "out1").string() + " > /dev/null");
    int rc2 = run_cli("run --config " + (dir / "cfg.json").string() + " --out " +
                      (dir / "out2").string() + " > /dev/null");
    CHECK(rc1 == 0);
    CHECK(rc2 == 0);
    REQUIRE(fs::exists(dir / "out1" / "trace.csv"));
    REQUIRE(fs::exists(dir / "out1" / "summary.json"));
    REQUIRE(fs::exists(dir / "out1" / "residual.svg"));
    CHECK(slurp(dir / "out1" / "trace.csv") == slurp(dir / "out2" / "trace.csv"));

    int rc3 = run_cli("run --config " + (dir / "cfg.json").string() + " --out " +
                      (dir / "out3").string() + " --set solver.k_max=0 > /dev/null");
    CHECK(rc3 == 0);
    std::string trace = slurp(dir / "out3" / "trace.csv");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 2);  // header + k=0 row
    fs::remove_all(dir);
}

TEST_CASE("cli run: seed flag changes the trace, config errors exit 2") {
    fs::path dir = make_tmp_dir("seed");
    spit(dir / "cfg.json", kSmallConfig);
    CHECK(run_cli("run --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "a").string() + " > /dev/null") == 0);
    CHECK(run_cli("run --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "b").string() + " --seed 8 > /dev/null") == 0);
    CHECK(slurp(dir / "a" / "trace.csv") != slurp(dir / "b" / "trace.csv"));

    spit(dir / "bad.json", R"({"solver": {"tau": 3}})");
    CHECK(run_cli("run --config " + (dir / "bad.json").string() + " 2> " +
                  (dir / "err.txt").string()) == 2);
    CHECK(slurp(dir / "err.txt").find("solver.s") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli sweep-tau and dump-config") {
    fs::path dir = make_tmp_dir("sweep");
    spit(dir / "cfg.json", R"({
      "problem": {"kind": "quadratic", "p": 10, "n": 2, "cond": 10.0},
      "solver": {"s": 1.1, "tau": 1, "k_max": 20000},
      "oracle": {"kind": "delayed"},
      "seed": 3
    })");
    int rc = run_cli("sweep-tau --config " + (dir / "cfg.json").string() + " --out " +
                     dir.string() + " --tau 1 2 4 --eps 1e-2 > /dev/null");
    CHECK(rc == 0);
    std::string csv = slurp(dir / "sweep.csv");
    CHECK(csv.rfind("tau,K,passes\n", 0) == 0);

    int rc2 = run_cli("dump-config > " + (dir / "dump.json").string());
    CHECK(rc2 == 0);
    ExperimentConfig dumped = ExperimentConfig::from_json_text(slurp(dir / "dump.json"));
    CHECK(dumped.solver.s == 1.1);  // every default is visible
    fs::remove_all(dir);
}

TEST_CASE("cli run honors AFP_OUT_DIR") {
#ifndef _WIN32
    fs::path dir = make_tmp_dir("envout");
    spit(dir / "cfg.json", kSmallConfig);
    fs::path envdir = dir / "env_out";
    std::string cmd = "AFP_OUT_DIR=" + envdir.string() + " " + std::string(AFP_CLI_PATH) +
                      " run --config " + (dir / "cfg.json").string() + " > /dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(envdir / "trace.csv"));
    fs::remove_all(dir);
#endif
}

TEST_CASE("cli validate passes on a fresh build") {
    CHECK(run_cli("validate > /dev/null") == 0);
}
