#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "belief_divide/cli.hpp"
#include "belief_divide/io.hpp"

using namespace belief_divide;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("belief_divide_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// True when both directories hold the same files with identical bytes,
/// ignoring the run manifest.
bool same_outputs(const fs::path& a, const fs::path& b) {
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename();
        if (name == "manifest.json") continue;
        if (!fs::exists(b / name) || slurp(entry.path()) != slurp(b / name)) return false;
        ++n;
    }
    std::size_t m = 0;
    for (const auto& entry : fs::directory_iterator(b)) m += entry.path().filename() != "manifest.json";
    return n == m && n > 0;
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
    CHECK(run({}).code == exit_usage_error);
    CHECK(run({"bogus"}).code == exit_usage_error);
    const Run r = run({"gen-data", "--out", "x", "--frobnicate"});
    CHECK(r.code == exit_usage_error);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(run({"gen-data"}).code == exit_usage_error);
    CHECK(run({"--help"}).code == exit_success);
}

TEST_CASE("runtime errors exit with status 1 and a structured message") {
    TempDir dir;
    const Run r = run({"estimate", "--data", dir / "missing", "--out", dir / "e"});
    CHECK(r.code == exit_runtime_error);
    const Json j = Json::parse(r.err);
    CHECK(j.at("error") == "estimate");
    CHECK(j.at("message").get<std::string>().find("missing") != std::string::npos);

    CHECK(run({"policy", "--preset", "paper-fig9", "--out", dir / "p"}).code == exit_runtime_error);
}

TEST_CASE("gen-data is deterministic across runs and worker counts") {
    TempDir dir;
    std::ofstream(dir / "pop.json") << R"({"n_users": 40, "horizon_days": 20})";
    REQUIRE(run({"gen-data", "--config", dir / "pop.json", "--seed", "7", "--out", dir / "a", "--threads", "1"}).code ==
            0);
    REQUIRE(run({"gen-data", "--config", dir / "pop.json", "--seed", "7", "--out", dir / "b", "--threads", "4"}).code ==
            0);
    CHECK(same_outputs(dir / "a", dir / "b"));
    for (const char* f : {"profiles.csv", "panel.csv", "truth.csv", "params.json", "manifest.json"}) {
        CHECK_MESSAGE(fs::exists(fs::path(dir / "a") / f), f);
    }
    const Json manifest = read_json(fs::path(dir / "a") / "manifest.json");
    CHECK(manifest.at("command") == "gen-data");
    CHECK(manifest.at("master_seed") == 7);
    CHECK(manifest.at("inputs").size() == 1);

    REQUIRE(run({"gen-data", "--config", dir / "pop.json", "--seed", "8", "--out", dir / "c"}).code == 0);
    CHECK_FALSE(same_outputs(dir / "a", dir / "c"));
}

TEST_CASE("the seed falls back to the environment") {
    TempDir dir;
    std::ofstream(dir / "pop.json") << R"({"n_users": 10, "horizon_days": 5})";
    REQUIRE(run({"gen-data", "--config", dir / "pop.json", "--seed", "21", "--out", dir / "a"}).code == 0);
    setenv("BELIEF_DIVIDE_SEED", "21", 1);
    const Run r = run({"gen-data", "--config", dir / "pop.json", "--out", dir / "b"});
    setenv("BELIEF_DIVIDE_SEED", "not-a-number", 1);
    const Run bad = run({"gen-data", "--config", dir / "pop.json", "--out", dir / "c"});
    unsetenv("BELIEF_DIVIDE_SEED");
    CHECK(r.code == 0);
    CHECK(same_outputs(dir / "a", dir / "b"));
    CHECK(bad.code == exit_runtime_error);
}

TEST_CASE("estimate and report on generated data") {
    TempDir dir;
    std::ofstream(dir / "pop.json") << R"({"n_users": 2000, "horizon_days": 5})";
    REQUIRE(run({"gen-data", "--config", dir / "pop.json", "--seed", "3", "--out", dir / "data"}).code == 0);
    const Run est = run({"estimate", "--data", dir / "data", "--init", dir / "data/params.json", "--free", "c",
                         "--draws", "1000", "--seed", "1", "--out", dir / "fit"});
    REQUIRE(est.code == 0);
    const EstimationResult r = estimation_from_json(read_json(fs::path(dir / "fit") / "estimation.json"));
    CHECK(r.converged);
    CHECK(std::abs(r.params_hat.c - 1.411) < 0.05);
    CHECK(r.std_errors.size() == 1);

    const Run again = run({"estimate", "--data", dir / "data", "--init", dir / "data/params.json", "--free", "c",
                           "--draws", "1000", "--seed", "1", "--out", dir / "fit2", "--threads", "4"});
    REQUIRE(again.code == 0);
    CHECK(same_outputs(dir / "fit", dir / "fit2"));

    const Run rep = run({"report", "--input", dir / "fit/estimation.json", "--out", dir / "rep"});
    CHECK(rep.code == 0);
    CHECK(rep.out.find("loglik") != std::string::npos);
    CHECK(slurp(fs::path(dir / "rep") / "report.txt") == rep.out);
}

TEST_CASE("report on the bundled parameters") {
    TempDir dir;
    const Run rep = run({"report", "--input", std::string(BELIEF_DIVIDE_DATA_DIR) + "/table4.json", "--out", dir / "r"});
    CHECK(rep.code == 0);
    CHECK(rep.out.find("4.842") != std::string::npos);
    CHECK(rep.out.find("-0.384") != std::string::npos);
}

TEST_CASE("policy presets") {
    TempDir dir;
    const std::string params = std::string(BELIEF_DIVIDE_DATA_DIR) + "/table4.json";
    const Run fig4 = run({"policy", "--params", params, "--preset", "paper-fig4", "--seed", "1", "--trajectories",
                          "3000", "--bootstrap", "200", "--out", dir / "f4"});
    REQUIRE(fig4.code == 0);
    std::ifstream in(fs::path(dir / "f4") / "errorbars.csv");
    std::string line;
    std::vector<std::vector<std::string>> rows;
    std::getline(in, line);
    CHECK(line == "label,point,ci_low,ci_high");
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        rows.push_back(cells);
    }
    REQUIRE(rows.size() == 5);
    CHECK(rows[0][0] == "fast");
    CHECK(rows[1][0] == "slow");
    CHECK(std::stod(rows[1][1]) > std::stod(rows[0][1]));
    CHECK(fs::exists(fs::path(dir / "f4") / "errorbars.svg"));

    const Run fig4b = run({"policy", "--params", params, "--preset", "paper-fig4", "--seed", "1", "--trajectories",
                           "3000", "--bootstrap", "200", "--out", dir / "f4b", "--threads", "4"});
    REQUIRE(fig4b.code == 0);
    CHECK(same_outputs(dir / "f4", dir / "f4b"));

    const Run fig3 = run({"policy", "--preset", "paper-fig3", "--seed", "1", "--out", dir / "f3"});
    REQUIRE(fig3.code == 0);
    for (const char* f : {"trajectory_no_training.csv", "trajectory_training_200.csv", "trajectories.svg"}) {
        CHECK_MESSAGE(fs::exists(fs::path(dir / "f3") / f), f);
    }
}

TEST_CASE("policy with a scenario file") {
    TempDir dir;
    std::ofstream(dir / "scen.json") << R"({
      "base": {"days": 400, "n_trajectories": 500, "n_bootstrap": 100},
      "scenarios": [
        {"label": "young", "profile": {"high_edu": 1, "age": 25, "male": 1, "white": 1, "it": 0, "latent_class": "class2"}},
        {"label": "trained", "profile": {"high_edu": 0, "age": 60, "male": 0, "white": 0, "it": 0, "latent_class": "class1"},
         "config": {"pre_training_uses": 50}, "v_i": 0.5}
      ]})";
    const Run r = run({"policy", "--config", dir / "scen.json", "--seed", "2", "--out", dir / "p"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(slurp(fs::path(dir / "p") / "errorbars.csv").find("trained,") != std::string::npos);
}

TEST_CASE("recover writes a report") {
    TempDir dir;
    std::ofstream(dir / "rec.json") << R"({
      "population": {"n_users": 80, "horizon_days": 10},
      "n_replications": 2,
      "fit": {"draws": 10, "free_parameters": ["c", "alpha0"], "restarts": 0}
    })";
    const Run r = run({"recover", "--config", dir / "rec.json", "--seed", "4", "--out", dir / "r"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const Json j = read_json(fs::path(dir / "r") / "recovery.json");
    CHECK(j.at("parameters").size() == 2);
    CHECK(fs::exists(fs::path(dir / "r") / "manifest.json"));
}
