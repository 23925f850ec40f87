#include "doctest.h"

#include "json.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "slowfast_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(SLOWFAST_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
    fs::create_directories(kWork);
    const fs::path p = kWork / name;
    std::ofstream(p) << text;
    return p;
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("ham on the constant system") {
    const auto cfg = write_config("ham.json", R"({"system": "constant", "ham": {"box": [-2, 2], "n_per_axis": 9, "grid_n": 32}})");
    const fs::path out = kWork / "ham_out";
    fs::remove_all(out);
    REQUIRE(run("ham --config " + cfg.string() + " --out-dir " + out.string()) == 0);
    std::ifstream in(out / "surface.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "beta_1,H,dH_1");
    int rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string b, h;
        std::getline(ss, b, ',');
        std::getline(ss, h, ',');
        CHECK(std::stod(h) == doctest::Approx(0.7 * std::stod(b)).epsilon(1e-8));
        ++rows;
    }
    CHECK(rows == 9);
    const auto manifest = nlohmann::json::parse(std::ifstream(out / "manifest.json"));
    CHECK(manifest["command"] == "ham");
    CHECK(manifest["outputs"].size() == 2);
    CHECK(manifest["config_hash"].get<std::string>().size() == 64);
}

TEST_CASE("documented CSV headers") {
    const auto cfg = write_config("all.json", R"({
      "system": "cosine-ring",
      "rate": {"box": [-3, 3], "n_per_axis": 31, "grid_n": 64, "alpha": [0.1, 0.2]},
      "action": {"path": {"T": 1, "segments": 8, "slope": 0.2}, "m_list": [2, 4], "box": [-3, 3], "n_per_axis": 31, "grid_n": 64},
      "simulate": {"epsilon": 0.3, "T": 0.1, "replicas": 1},
      "ldp": {"path": {"T": 0.3, "segments": 6}, "epsilons": [0.3], "replicas": 1000, "action_ref": 0},
      "minpath": {"x_end": 0.2, "m": 4, "box": [-3, 3], "n_per_axis": 31, "grid_n": 64}
    })");
    const fs::path out = kWork / "headers";
    fs::remove_all(out);
    REQUIRE(run("rate --config " + cfg.string() + " --out-dir " + (out / "rate").string()) == 0);
    REQUIRE(run("action --config " + cfg.string() + " --out-dir " + (out / "action").string()) == 0);
    REQUIRE(run("simulate --config " + cfg.string() + " --out-dir " + (out / "simulate").string()) == 0);
    REQUIRE(run("ldp --config " + cfg.string() + " --out-dir " + (out / "ldp").string()) == 0);
    REQUIRE(run("minpath --config " + cfg.string() + " --out-dir " + (out / "minpath").string()) == 0);
    CHECK(first_line(out / "rate" / "l_curve.csv") == "alpha_1,L,L_b,beta_star_1,on_boundary");
    CHECK(first_line(out / "action" / "path.csv") == "t,x_1");
    CHECK(first_line(out / "action" / "convergence.csv") == "m,action,discrepancy");
    CHECK(first_line(out / "simulate" / "trajectory_0.csv") == "t,x_1,y_1");
    CHECK(first_line(out / "ldp" / "ldp.csv") == "epsilon,p_hat,ci_low,ci_high,eps2_log_p,censored");
    CHECK(first_line(out / "minpath" / "path.csv") == "t,x_1");
    CHECK(fs::exists(out / "ldp" / "checkpoints" / "eps_0.json"));
}

TEST_CASE("ldp resumes from checkpoints") {
    const auto cfg = write_config("ldp.json", R"({"system": "cosine-ring",
      "ldp": {"path": {"T": 0.3, "segments": 6}, "epsilons": [0.3, 0.2], "replicas": 1000, "action_ref": 0}})");
    const fs::path out = kWork / "resume";
    fs::remove_all(out);
    REQUIRE(run("ldp --config " + cfg.string() + " --out-dir " + out.string()) == 0);
    std::stringstream first;
    first << std::ifstream(out / "ldp.csv").rdbuf();
    // a checkpoint with a matching key is reused verbatim
    auto cp = nlohmann::json::parse(std::ifstream(out / "checkpoints" / "eps_1.json"));
    cp["hits"] = 7;
    std::ofstream(out / "checkpoints" / "eps_1.json") << cp.dump(2) << "\n";
    REQUIRE(run("ldp --config " + cfg.string() + " --out-dir " + out.string()) == 0);
    const auto again = nlohmann::json::parse(std::ifstream(out / "checkpoints" / "eps_1.json"));
    CHECK(again["hits"] == 7);
    // a different seed invalidates it
    REQUIRE(run("ldp --config " + cfg.string() + " --seed 9 --out-dir " + out.string()) == 0);
    const auto fresh = nlohmann::json::parse(std::ifstream(out / "checkpoints" / "eps_1.json"));
    CHECK(fresh["hits"] != 7);
}

TEST_CASE("environment variable sets the default output directory") {
    const auto cfg = write_config("env.json", R"({"system": "constant", "ham": {"n_per_axis": 5, "grid_n": 16}})");
    const fs::path out = kWork / "env_out";
    fs::remove_all(out);
    const std::string cmd = "SLOWFAST_OUT_DIR=" + out.string() + " " + SLOWFAST_CLI + " ham --config " + cfg.string() +
                            " >/dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(out / "ham" / "manifest.json"));
}

TEST_CASE("errors map to distinct exit codes") {
    const auto good = write_config("good.json", R"({"system": "cosine-ring"})");
    const std::string out = " --out-dir " + (kWork / "err").string();
    CHECK(run("ham --config " + (kWork / "missing.json").string() + out) == 2);
    CHECK(run("ham --config " + good.string() + " --override ham.bogus=1" + out) == 2);
    CHECK(run("ham --config " + good.string() + " --override ham.grid_n=\\\"x\\\"" + out) == 2);
    CHECK(run("ham --config " + good.string() + " --override system=nope" + out) == 3);
    CHECK(run("simulate --config " + good.string() + " --override simulate.epsilon=2" + out) == 4);
    CHECK(run("minpath --config " + good.string() +
              " --override minpath.x_end=3 --override minpath.n_per_axis=11 --override minpath.grid_n=32" + out) == 7);
    CHECK(run("frobnicate --config " + good.string() + out) == 2);
    CHECK(run("--config " + good.string() + out) == 2);
}

}  // TEST_SUITE
