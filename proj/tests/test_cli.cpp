#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string cli = MEMHEAT_CLI_PATH;
const fs::path source_dir = MEMHEAT_SOURCE_DIR;

fs::path fresh_dir(const std::string& tag) {
    std::string templ = (fs::temp_directory_path() / ("memheat_" + tag + "_XXXXXX")).string();
    REQUIRE(mkdtemp(templ.data()) != nullptr);
    return templ;
}

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = cli + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("resolvent with M = 1 gives e^{-t}") {
    const auto dir = fresh_dir("resolvent");
    write(dir / "cfg.json",
          R"({"experiment": "resolvent", "kernel": "constant 1", "horizon": 2, "n_steps": 2000})");
    REQUIRE(run("resolvent --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string(),
                dir / "log") == 0);
    const auto rows = read_csv(dir / "out" / "resolvent.csv");
    REQUIRE(rows.size() == 2001);
    double err = 0.0;
    for (const auto& r : rows) {
        err = std::max(err, std::abs(r[2] - std::exp(-r[0])));
    }
    CHECK(err <= 1e-6);
    const auto result = nlohmann::json::parse(slurp(dir / "out" / "result.json"));
    CHECK(result["experiment"] == "resolvent");
    CHECK(result["metrics"]["closed_form_error"].get<double>() == doctest::Approx(err));
    for (const auto& f : result["manifest"]) {
        CHECK(fs::exists(dir / "out" / f.get<std::string>()));
    }
}

TEST_CASE("table kernels resolve relative to the config") {
    const auto dir = fresh_dir("table");
    std::string table = "t,value\n";
    for (int k = 0; k <= 10; ++k) {
        table += std::to_string(0.1 * k) + ",1\n";
    }
    write(dir / "m.csv", table);
    write(dir / "cfg.json", R"({"experiment": "resolvent", "kernel": "table m.csv", "n_steps": 10})");
    CHECK(run("resolvent --config " + (dir / "cfg.json").string(), dir / "log") == 0);
    CHECK(fs::exists(dir / "out" / "resolvent.csv"));
}

TEST_CASE("simulate with M = 0 is pure heat decay") {
    const auto dir = fresh_dir("simulate");
    write(dir / "cfg.json", R"({"experiment": "simulate", "kernel": "zero", "mode_count": 2,
        "n_steps": 2000, "simulate": {"route": "all", "xi": [1, 0.5]}})");
    REQUIRE(run("simulate --config " + (dir / "cfg.json").string(), dir / "log") == 0);
    for (const std::string route : {"direct", "maccamy", "closedform"}) {
        CAPTURE(route);
        const auto rows = read_csv(dir / "out" / ("trajectory_" + route + ".csv"));
        REQUIRE(rows.size() == 2 * 2001);
        double err = 0.0;
        for (const auto& r : rows) {
            const double exact = r[0] == 1.0 ? std::exp(-r[1]) : 0.5 * std::exp(-4.0 * r[1]);
            err = std::max(err, std::abs(r[2] - exact));
        }
        CHECK(err <= 1e-6);
        const auto side = nlohmann::json::parse(slurp(dir / "out" / ("trajectory_" + route + ".json")));
        CHECK(side["endpoint_admissible"] == true);
    }
}

TEST_CASE("bundled obstruct config reports cost blow-up") {
    const auto dir = fresh_dir("obstruct");
    REQUIRE(run("obstruct --config " + (source_dir / "configs" / "obstruct_default.json").string() + " --out " +
                    dir.string(),
                dir / "log") == 0);
    const auto verdict = nlohmann::json::parse(slurp(dir / "verdict.json"));
    CHECK(verdict["blowup_ratio"].get<double>() >= 10.0);
    CHECK(verdict["smooth_ratio"].get<double>() <= 2.0);
    CHECK(verdict["threshold_N"].is_number());
    const double p = verdict["decay_exponent"].get<double>();
    CHECK(p >= 2.8);
    CHECK(p <= 3.2);
    CHECK(read_csv(dir / "cost_curve.csv").size() == 5);
    CHECK(read_csv(dir / "bound_audit.csv").size() == 50);
}

TEST_CASE("invalid configs exit with 2 and name the field") {
    const auto dir = fresh_dir("bad");
    auto expect_field = [&](const std::string& body, const std::string& kind, const std::string& field) {
        write(dir / "cfg.json", body);
        CHECK(run(kind + " --config " + (dir / "cfg.json").string(), dir / "log") == 2);
        CHECK(slurp(dir / "log").find(field) != std::string::npos);
    };
    expect_field(R"({"experiment": "resolvent", "n_stepz": 10})", "resolvent", "n_stepz");
    expect_field(R"({"experiment": "resolvent", "horizon": -1})", "resolvent", "horizon");
    expect_field(R"({"experiment": "resolvent", "kernel": "gauss 2"})", "resolvent", "kernel");
    expect_field(R"({"experiment": "audit"})", "resolvent", "experiment");
    expect_field(R"({"experiment": "obstruct", "domain": {"lengths": ["pi"],
        "omega": {"lower": [0], "upper": [2.5]}, "omega_tilde": {"lower": [2], "upper": [2.8]}},
        "obstruct": {"center": [2.4]}})", "obstruct", "domain");
    expect_field(R"({"experiment": "resolvent", "domain": {"lengths": ["tau"]}})", "resolvent", "domain.lengths");
    expect_field("{not json", "resolvent", "not valid JSON");
    CHECK(run("resolvent --config " + (dir / "missing.json").string(), dir / "log") == 2);
    CHECK(run("resolvent", dir / "log") == 2);
    CHECK(run("frobnicate", dir / "log") == 2);
}

TEST_CASE("numerical failure exits with 3") {
    const auto dir = fresh_dir("singular");
    // 1 + h M(0) / 2 = 0 with h = 0.1.
    write(dir / "cfg.json", R"({"experiment": "resolvent", "kernel": "constant -20", "n_steps": 10})");
    CHECK(run("resolvent --config " + (dir / "cfg.json").string(), dir / "log") == 3);
}

TEST_CASE("verify: suites, usage errors and determinism") {
    const auto dir = fresh_dir("verify");
    CHECK(run("verify volterra --out " + (dir / "a").string(), dir / "log") == 0);
    CHECK(slurp(dir / "log").find("PASS") != std::string::npos);
    CHECK(run("verify volterra --out " + (dir / "b").string(), dir / "log") == 0);
    CHECK(slurp(dir / "a" / "verify_volterra.csv") == slurp(dir / "b" / "verify_volterra.csv"));
    CHECK(run("verify routes --out " + (dir / "a").string(), dir / "log") == 0);
    CHECK(run("verify nonsense --out " + (dir / "a").string(), dir / "log") == 2);
}

TEST_CASE("repeated runs write byte-identical CSVs") {
    const auto dir = fresh_dir("repeat");
    write(dir / "cfg.json", R"({"experiment": "simulate", "kernel": "exp -1", "mode_count": 4,
        "n_steps": 400, "simulate": {"route": "all"}})");
    for (const std::string out : {"one", "two"}) {
        REQUIRE(run("simulate --config " + (dir / "cfg.json").string() + " --out " + (dir / out).string(),
                    dir / "log") == 0);
    }
    for (const std::string route : {"direct", "maccamy", "closedform"}) {
        const std::string name = "trajectory_" + route + ".csv";
        CHECK(slurp(dir / "one" / name) == slurp(dir / "two" / name));
    }
}

TEST_CASE("help lists the defaults") {
    const auto dir = fresh_dir("help");
    CHECK(run("--help", dir / "log") == 0);
    const auto text = slurp(dir / "log");
    CHECK(text.find("n_steps: 1000") != std::string::npos);
    CHECK(text.find("tikhonov_scale") != std::string::npos);
    CHECK(text.find("verify") != std::string::npos);
}
