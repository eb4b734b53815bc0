#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef EAH_CLI_PATH
#error "EAH_CLI_PATH must point at the command-line binary"
#endif

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static int counter = 0;
    fs::path dir = fs::path("cli_scratch") / ("case_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const fs::path& dir, const std::string& name,
                       const std::string& content) {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << content;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// Runs the binary with stdout/stderr captured into files; returns exit code.
int run_cli(const fs::path& dir, const std::string& args) {
    const std::string cmd = std::string(EAH_CLI_PATH) + " " + args + " > " +
                            (dir / "stdout.txt").string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

const char* kUnivariateSim = R"({
  "model": {"mu": [1.0], "a": [[0.5]], "beta": 1.0},
  "simulate": {"horizon": 20.0, "rng_seed": 11}
})";

const char* kCountsCsv =
    "date,a,b\n"
    "2020-01-16,3,1\n"
    "2020-01-17,5,2\n"
    "2020-01-18,2,2\n"
    "2020-01-19,4,0\n";

}  // namespace

TEST_CASE("usage and help exit codes") {
    const auto dir = scratch();
    CHECK(run_cli(dir, "") == 1);
    CHECK(run_cli(dir, "--help") == 0);
    CHECK(run_cli(dir, "simulate --help") == 0);
    CHECK(run_cli(dir, "frobnicate") == 1);
    // Data/config problems (including an unreadable config path) map to 2.
    CHECK(run_cli(dir, "simulate --config does_not_exist.json --out x") == 2);
}

TEST_CASE("simulate writes deterministic events") {
    const auto dir = scratch();
    const auto cfg = write_file(dir, "sim.json", kUnivariateSim);
    const auto out_a = (dir / "a").string();
    const auto out_b = (dir / "b").string();
    REQUIRE(run_cli(dir, "simulate --config " + cfg + " --out " + out_a) == 0);
    REQUIRE(run_cli(dir, "simulate --config " + cfg + " --out " + out_b) == 0);
    const std::string events_a = slurp(fs::path(out_a) / "events.csv");
    CHECK(events_a.rfind("time,node", 0) == 0);
    CHECK(events_a == slurp(fs::path(out_b) / "events.csv"));
    CHECK(slurp(dir / "stdout.txt").empty());  // results go to files, not stdout

    const auto out_c = (dir / "c").string();
    REQUIRE(run_cli(dir, "simulate --config " + cfg + " --out " + out_c +
                             " --seed 12") == 0);
    CHECK(slurp(fs::path(out_c) / "events.csv") != events_a);

    const auto out_d = (dir / "d").string();
    REQUIRE(run_cli(dir, "simulate --config " + cfg + " --out " + out_d +
                             " --format json") == 0);
    const std::string json = slurp(fs::path(out_d) / "events.json");
    CHECK(json.find("\"events\"") != std::string::npos);
}

TEST_CASE("simulate reports explosions as numerical failures") {
    const auto dir = scratch();
    const auto cfg = write_file(dir, "hot.json", R"({
  "model": {"mu": [1.0], "a": [[1.5]], "beta": 1.0},
  "simulate": {"horizon": 60.0, "rng_seed": 1}
})");
    CHECK(run_cli(dir, "simulate --config " + cfg + " --out " + (dir / "o").string()) ==
          3);
    const std::string err = slurp(dir / "stderr.txt");
    CHECK(err.find("warning") != std::string::npos);  // instability warned first
}

TEST_CASE("fit consumes events or counts but not both") {
    const auto dir = scratch();
    const auto cfg = write_file(dir, "sim.json", kUnivariateSim);
    const auto out = (dir / "sim_out").string();
    REQUIRE(run_cli(dir, "simulate --config " + cfg + " --out " + out) == 0);
    const std::string events = (fs::path(out) / "events.csv").string();

    const auto fit_out = (dir / "fit_out").string();
    REQUIRE(run_cli(dir, "fit --config " + cfg + " --events " + events + " --out " +
                             fit_out) == 0);
    const std::string fit_json = slurp(fs::path(fit_out) / "fit.json");
    CHECK(fit_json.find("\"a_hat\"") != std::string::npos);
    CHECK(fit_json.find("\"lower_bound_trace\"") != std::string::npos);

    CHECK(run_cli(dir, "fit --config " + cfg + " --out " + (dir / "x").string()) == 1);
    const auto counts = write_file(dir, "counts.csv", "date,a\n2020-01-16,3\n");
    CHECK(run_cli(dir, "fit --config " + cfg + " --events " + events + " --counts " +
                           counts + " --out " + (dir / "y").string()) == 1);
}

TEST_CASE("fit rejects dimension mismatches as data errors") {
    const auto dir = scratch();
    const auto cfg = write_file(dir, "sim.json", kUnivariateSim);  // univariate model
    const auto counts = write_file(dir, "counts.csv", kCountsCsv);  // two nodes
    CHECK(run_cli(dir, "fit --config " + cfg + " --counts " + counts + " --out " +
                           (dir / "o").string()) == 2);
    CHECK(run_cli(dir, "fit --config " + cfg + " --counts /dev/null --out " +
                           (dir / "p").string()) == 2);
}

TEST_CASE("predict emits a csv and one plot per node") {
    const auto dir = scratch();
    const auto cfg = write_file(dir, "model.json", R"({
  "model": {"mu": [0.5, 0.5], "a": [[0.3, 0.1], [0.1, 0.3]], "beta": 1.0}
})");
    const auto counts = write_file(dir, "counts.csv", kCountsCsv);
    const auto out = (dir / "o").string();
    REQUIRE(run_cli(dir, "predict --config " + cfg + " --counts " + counts + " --out " +
                             out) == 0);
    const std::string csv = slurp(fs::path(out) / "predictions.csv");
    CHECK(csv.rfind("bin,node,predicted,observed", 0) == 0);
    CHECK(fs::exists(fs::path(out) / "plots" / "node0.svg"));
    CHECK(fs::exists(fs::path(out) / "plots" / "node1.svg"));
    const std::string svg = slurp(fs::path(out) / "plots" / "node0.svg");
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
}

TEST_CASE("theory stability reports instability without failing") {
    const auto dir = scratch();
    const auto cfg = write_file(dir, "hot.json", R"({
  "model": {"mu": [1.0], "a": [[1.5]], "beta": 1.0}
})");
    const auto out = (dir / "o").string();
    CHECK(run_cli(dir, "theory stability --config " + cfg + " --out " + out) == 0);
    const std::string json = slurp(fs::path(out) / "theory.json");
    CHECK(json.find("\"stable\": false") != std::string::npos);
    CHECK(json.find("\"intensity_bound\": null") != std::string::npos);
}

TEST_CASE("theory residual writes analytic and Monte-Carlo values") {
    const auto dir = scratch();
    const auto cfg = write_file(dir, "stable.json", R"({
  "model": {"mu": [1.0], "a": [[0.5]], "beta": 1.0}
})");
    const auto out = (dir / "o").string();
    REQUIRE(run_cli(dir, "theory residual --config " + cfg +
                             " --y 5 --l 1 --mc 2000 --seed 3 --out " + out) == 0);
    const std::string json = slurp(fs::path(out) / "theory.json");
    CHECK(json.find("\"residual\"") != std::string::npos);
    CHECK(json.find("\"value\"") != std::string::npos);
    CHECK(json.find("\"mc\"") != std::string::npos);
    CHECK(json.find("\"std_error\"") != std::string::npos);
}

TEST_CASE("theory cluster-length writes the grid files") {
    const auto dir = scratch();
    const auto cfg = write_file(dir, "stable.json", R"({
  "model": {"mu": [1.0], "a": [[0.5]], "beta": 1.0}
})");
    const auto out = (dir / "o").string();
    REQUIRE(run_cli(dir, "theory cluster-length --config " + cfg +
                             " --t-max 2 --y-max 2 --step 0.25 --out " + out) == 0);
    CHECK(fs::exists(fs::path(out) / "cluster_length.csv"));
    const std::string csv = slurp(fs::path(out) / "cluster_length.csv");
    CHECK(csv.rfind("t,y,d", 0) == 0);
    const std::string json = slurp(fs::path(out) / "theory.json");
    CHECK(json.find("\"cluster_length\"") != std::string::npos);
}

TEST_CASE("reproduce table1 emits the truth-versus-estimate table") {
    const auto dir = scratch();
    const auto out_a = (dir / "a").string();
    const auto out_b = (dir / "b").string();
    REQUIRE(run_cli(dir, "reproduce table1 --seed 1 --runs 1 --out " + out_a) == 0);
    REQUIRE(run_cli(dir, "reproduce table1 --seed 1 --runs 1 --out " + out_b) == 0);
    const std::string csv = slurp(fs::path(out_a) / "table1.csv");
    CHECK(csv.rfind("simulation,parameter,truth,estimate", 0) == 0);
    CHECK(csv.find("A(0,1)") != std::string::npos);
    CHECK(csv.find("1.500000000") != std::string::npos);
    CHECK(csv == slurp(fs::path(out_b) / "table1.csv"));
    CHECK(fs::exists(fs::path(out_a) / "table1_runs.csv"));

    const auto out_c = (dir / "c").string();
    REQUIRE(run_cli(dir, "reproduce table1 --seed 2 --runs 1 --format json --out " +
                             out_c) == 0);
    const std::string json = slurp(fs::path(out_c) / "table1.json");
    CHECK(json.find("\"median\"") != std::string::npos);
}

TEST_CASE("reproduce forecast-demo emits predictions and plots") {
    const auto dir = scratch();
    const auto out = (dir / "o").string();
    REQUIRE(run_cli(dir, "reproduce forecast-demo --seed 1 --out " + out) == 0);
    const std::string rmse = slurp(fs::path(out) / "forecast_rmse.csv");
    CHECK(rmse.rfind("model,beta,scale,rmse_full,rmse_late,late_bias", 0) == 0);
    CHECK(rmse.find("eahdm") != std::string::npos);
    CHECK(rmse.find("hawkes") != std::string::npos);
    CHECK(fs::exists(fs::path(out) / "predictions.csv"));
    CHECK(fs::exists(fs::path(out) / "counts.csv"));
    CHECK(fs::exists(fs::path(out) / "plots" / "eahdm_node0.svg"));
    CHECK(fs::exists(fs::path(out) / "plots" / "hawkes_node3.svg"));
}
