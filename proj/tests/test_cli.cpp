#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string cli = FB_CLI_BIN;
const std::string data = FB_DATA_DIR;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("fb_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string dir(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("cli: check accepts the sample model") {
    CHECK(run("check --model " + data + "/nps4_model.json") == 0);
}

TEST_CASE("cli: check rejects an invalid model with exit code 2 and a report") {
    TempDir tmp;
    auto model = nlohmann::json::parse(slurp(data + "/nps4_model.json"));
    model["geometry"]["gasket_outer_radius_m"] = 0.01;  // inside the inner radius
    const auto bad = tmp.dir("bad_model.json");
    std::ofstream(bad) << model.dump(2);
    const auto out = tmp.dir("out");
    CHECK(run("check --model " + bad + " --out " + out) == 2);
    const auto report = nlohmann::json::parse(slurp(fs::path(out) / "validation.json"));
    CHECK_FALSE(report.at("valid").get<bool>());
    CHECK_FALSE(report.at("violations").empty());
}

TEST_CASE("cli: missing input file gives exit code 4 and an error record") {
    TempDir tmp;
    const auto out = tmp.dir("out");
    CHECK(run("solve --model " + tmp.dir("absent.json") + " --loads " + data +
              "/nps4_loads.json --out " + out) == 4);
    const auto rec = nlohmann::json::parse(slurp(fs::path(out) / "error.json"));
    CHECK(rec.at("exit_code").get<int>() == 4);
}

TEST_CASE("cli: solve writes the stress field, solution and manifest") {
    TempDir tmp;
    const auto out = tmp.dir("out");
    REQUIRE(run("solve --model " + data + "/nps4_model.json --loads " + data +
                "/nps4_loads.json --out " + out) == 0);
    CHECK(fs::exists(fs::path(out) / "stress_field.csv"));
    CHECK(fs::exists(fs::path(out) / "manifest.json"));
    const auto sol = nlohmann::json::parse(slurp(fs::path(out) / "solution.json"));
    CHECK(sol.at("bolt_forces_N").size() == 8);
    CHECK(sol.at("equilibrium_residual").get<double>() <= 1e-8);
    const auto manifest = nlohmann::json::parse(slurp(fs::path(out) / "manifest.json"));
    CHECK(manifest.at("command") == "solve");
    CHECK(manifest.at("inputs").size() == 2);
    // The lock is released after a successful run.
    CHECK_FALSE(fs::exists(fs::path(out) / ".flange_balance.lock"));
}

TEST_CASE("cli: a held output lock aborts the run") {
    TempDir tmp;
    const auto out = tmp.dir("out");
    fs::create_directories(out);
    std::ofstream(fs::path(out) / ".flange_balance.lock") << "held\n";
    CHECK(run("solve --model " + data + "/nps4_model.json --loads " + data +
              "/nps4_loads.json --out " + out) == 4);
    CHECK(fs::exists(fs::path(out) / ".flange_balance.lock"));  // not stolen
}

TEST_CASE("cli: optimize converges and writes the full report set") {
    TempDir tmp;
    const auto out = tmp.dir("out");
    REQUIRE(run("optimize --model " + data + "/nps4_model.json --loads " + data +
                "/nps4_loads.json --out " + out) == 0);
    for (const char* f : {"result.json", "preload_table.csv", "iteration_trace.csv",
                          "polar_stress.csv", "external_radius_profile.csv",
                          "convergence_band.csv", "manifest.json"}) {
        INFO(f);
        CHECK(fs::exists(fs::path(out) / f));
    }
    const auto res = nlohmann::json::parse(slurp(fs::path(out) / "result.json"));
    CHECK(res.at("converged").get<bool>());
    CHECK(res.at("final_preloads_N").size() == 8);
    // Header plus one row per bolt.
    CHECK(count_lines(slurp(fs::path(out) / "preload_table.csv")) == 9);
}

TEST_CASE("cli: iteration cap returns exit code 3 but still writes outputs") {
    TempDir tmp;
    const auto out = tmp.dir("out");
    CHECK(run("optimize --model " + data + "/nps4_model.json --loads " + data +
              "/nps4_loads.json --out " + out + " --max-iters 1 --tolerance 1e-9") == 3);
    const auto res = nlohmann::json::parse(slurp(fs::path(out) / "result.json"));
    CHECK_FALSE(res.at("converged").get<bool>());
    // Three bootstrap analyses plus the single permitted secant iteration.
    CHECK(res.at("history").size() == 4);
    CHECK(res.at("history")[0].at("label") == "ideal");
    CHECK(res.at("history")[1].at("label") == "bootstrap_overload");
    CHECK(res.at("history")[2].at("label") == "bootstrap_eq1");
}

TEST_CASE("cli: optimize output is byte-identical across runs") {
    TempDir tmp;
    const auto a = tmp.dir("a");
    const auto b = tmp.dir("b");
    const std::string args = "optimize --model " + data + "/nps4_model.json --loads " + data +
                             "/nps4_loads.json --out ";
    REQUIRE(run(args + a) == 0);
    REQUIRE(run(args + b) == 0);
    for (const char* f : {"result.json", "preload_table.csv", "iteration_trace.csv",
                          "polar_stress.csv", "external_radius_profile.csv",
                          "convergence_band.csv"}) {
        INFO(f);
        CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
    }
}

TEST_CASE("cli: condense exports a readable reduced matrix and dof map") {
    TempDir tmp;
    const auto out = tmp.dir("out");
    REQUIRE(run("condense --model " + data + "/nps4_model.json --out " + out) == 0);
    const auto mtx = slurp(fs::path(out) / "reduced.mtx");
    CHECK(mtx.rfind("%%MatrixMarket matrix coordinate real symmetric", 0) == 0);
    const auto map = nlohmann::json::parse(slurp(fs::path(out) / "reduced_dofmap.json"));
    // remote(3) + gasket stations(64) + bolt rotations(8)
    CHECK(map.size() == 75);
}

TEST_CASE("cli: gasket curve override changes the result") {
    TempDir tmp;
    const auto out1 = tmp.dir("a");
    const auto out2 = tmp.dir("b");
    REQUIRE(run("solve --model " + data + "/nps4_model.json --loads " + data +
                "/nps4_loads.json --out " + out1) == 0);
    REQUIRE(run("solve --model " + data + "/nps4_model.json --gasket " + data +
                "/nps4_gasket.csv --loads " + data + "/nps4_loads.json --out " + out2) == 0);
    // The CSV carries the same curve as the embedded one: identical output.
    CHECK(slurp(fs::path(out1) / "solution.json") == slurp(fs::path(out2) / "solution.json"));
}
