#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
    fs::path root;
    Scratch() {
        root = fs::temp_directory_path() / ("cvdyn_cli_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Scratch() { fs::remove_all(root); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args, const fs::path& err_file, const std::string& env = "") {
    const std::string cmd = env + " " + CVDYN_CLI_PATH + " " + args + " > /dev/null 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> column(const std::string& csv, std::size_t index) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string cell;
        for (std::size_t i = 0; i <= index; ++i) std::getline(row, cell, ',');
        out.push_back(cell);
    }
    return out;
}

fs::path write(const fs::path& p, const std::string& body) {
    std::ofstream(p) << body;
    return p;
}

}  // namespace

TEST_CASE("threshold scenario reports the analytic threshold") {
    Scratch s;
    const auto out = s.root / "thr";
    REQUIRE(run_cli("--scenario threshold --out " + out.string(), s.root / "err") == 0);
    const auto m = json::parse(slurp(out / "manifest.json"));
    CHECK(m["scenario"] == "threshold");
    CHECK(std::abs(m["derived"]["r_th"].get<double>() - 1.4976) <= 1e-3);
    CHECK(m["derived"]["omega_2"].get<double>() == 1.0);
    CHECK(m["derived"].contains("nbar"));
    CHECK(m["wall_time_s"].get<double>() >= 0.0);
    CHECK(fs::exists(out / "threshold.csv"));
}

TEST_CASE("preset sweep writes one CSV per run with a shared grid") {
    Scratch s;
    const auto cfg = write(s.root / "short.ini", "[scenario]\npreset = fig2\n[time]\nt_end = 1\ndt_out = 0.01\n");
    const auto a = s.root / "a";
    const auto b = s.root / "b";
    REQUIRE(run_cli("--config " + cfg.string() + " --jobs 3 --out " + a.string(), s.root / "err") == 0);
    REQUIRE(run_cli("--config " + cfg.string() + " --jobs 1 --out " + b.string(), s.root / "err") == 0);
    const std::vector<std::string> names = {"fig2_r_1.csv", "fig2_r_1.498.csv", "fig2_r_2.csv"};
    const auto grid = column(slurp(a / names[0]), 0);
    CHECK(grid.size() == 101);
    for (const auto& n : names) {
        REQUIRE(fs::exists(a / n));
        CHECK(column(slurp(a / n), 0) == grid);
        CHECK(slurp(a / n) == slurp(b / n));
    }
    const auto m = json::parse(slurp(a / "manifest.json"));
    CHECK(m["preset"] == "fig2");
    REQUIRE(m["runs"].size() == 3);
    CHECK(m["runs"][1]["sweep_value"].get<double>() == 1.498);
    CHECK(m["runs"][1]["derived"]["omega_f"].get<double>() == 1.0);
    CHECK(m["config"]["bath"]["temperature"] == "10");

    // The manifest alone reproduces the run.
    const auto c = s.root / "c";
    REQUIRE(run_cli("--config " + (a / "manifest.json").string() + " --out " + c.string(), s.root / "err") == 0);
    for (const auto& n : names) CHECK(slurp(a / n) == slurp(c / n));
}

TEST_CASE("ring-cavity run") {
    Scratch s;
    const auto out = s.root / "rc";
    REQUIRE(run_cli("--preset ring-cavity --out " + out.string(), s.root / "err") == 0);
    const auto m = json::parse(slurp(out / "manifest.json"));
    CHECK(m["derived"]["xi0"].get<double>() == m["derived"]["xi1"].get<double>());
    CHECK(m["derived"]["xi0"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(m["runs"][0]["final_distance"].get<double>() <= 1e-3);
    CHECK(fs::exists(out / "ring-cavity.csv"));
}

TEST_CASE("exit codes") {
    Scratch s;
    const auto err = s.root / "err";
    const auto no_kappa = write(s.root / "rc.ini", "[scenario]\ntype = ring-cavity\n");
    CHECK(run_cli("--config " + no_kappa.string() + " --out " + (s.root / "x").string(), err) == 2);
    CHECK(slurp(err).find("kappa") != std::string::npos);

    const auto broken = write(s.root / "broken.ini", "[bath]\ngamma0 = 1\nno equals here\n");
    CHECK(run_cli("--config " + broken.string(), err) == 2);
    CHECK(slurp(err).find("line 3") != std::string::npos);

    CHECK(run_cli("--bogus", err) == 2);
    CHECK(run_cli("--preset fig9", err) == 2);
    CHECK(run_cli("--scenario nonsense", err) == 2);

    const auto unstable = write(s.root / "unstable.ini",
                                "[scenario]\ntype = ring-cavity\n[ring_cavity]\nkappa = 1\nomega_u = 1\nomega_s = 1\n");
    CHECK(run_cli("--config " + unstable.string() + " --out " + (s.root / "y").string(), err) == 3);
    CHECK(slurp(err).find("unstable") != std::string::npos);
}

TEST_CASE("output directory from the environment") {
    Scratch s;
    const auto env_dir = s.root / "env";
    const auto flag_dir = s.root / "flag";
    const std::string env = "CVDYN_OUTPUT_DIR=" + env_dir.string();
    REQUIRE(run_cli("--scenario threshold", s.root / "err", env) == 0);
    CHECK(fs::exists(env_dir / "manifest.json"));
    REQUIRE(run_cli("--scenario threshold --out " + flag_dir.string(), s.root / "err", env) == 0);
    CHECK(fs::exists(flag_dir / "manifest.json"));
}
