#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kBin = TCLAB_BIN;
const std::string kRoot = "/tmp/tclab_cli_test";

int run_cmd(const std::string& args) {
    std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
    int st = std::system(cmd.c_str());
    if (st < 0) return -1;
    return WEXITSTATUS(st);
}

int run_cmd_env(const std::string& env, const std::string& args) {
    std::string cmd = env + " " + kBin + " " + args + " >/dev/null 2>&1";
    int st = std::system(cmd.c_str());
    if (st < 0) return -1;
    return WEXITSTATUS(st);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

std::string fresh_dir(const std::string& name) {
    std::string d = kRoot + "/" + name;
    fs::remove_all(d);
    fs::create_directories(kRoot);
    return d;
}

// Split a CSV document into cell rows (no quoted cells in numeric tables).
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

// A grid point of n=4096 that lies inside the admissible alpha window at
// lambda = 1e6, so profile grids hit the peak crest exactly.
const char* kGridAlpha = "0.6171875";

}  // namespace

TEST_CASE("attractor subcommand writes a flat curve at beta 0") {
    std::string out = fresh_dir("attr0");
    int rc = run_cmd("attractor --beta 0 --grid 64 --alpha mid --out " + out);
    REQUIRE(rc == 0);

    auto rows = csv_rows(slurp(out + "/curve.csv"));
    REQUIRE(rows.size() == 65);  // header + 64 points
    REQUIRE(rows[0][0] == "theta");
    REQUIRE(rows[0][1] == "psi");
    for (size_t i = 1; i < rows.size(); ++i) {
        double psi = std::strtod(rows[i][1].c_str(), nullptr);
        CHECK(std::fabs(psi - 1.0 / 3.0) < 1e-12);
        CHECK(rows[i][6] == "1");  // converged
    }

    nlohmann::json man = nlohmann::json::parse(slurp(out + "/manifest.json"));
    CHECK(man["tool"] == "tclab");
    CHECK(man["command"] == "attractor");
    CHECK(man["outputs"][0] == "curve.csv");
    CHECK(man["config"]["beta"].get<double>() == 0.0);
}

TEST_CASE("profile subcommand hits the peak levels") {
    std::string out = fresh_dir("prof1");
    int rc = run_cmd(std::string("profile --beta 1 --grid 4096 --alpha ") + kGridAlpha +
                     " --out " + out);
    REQUIRE(rc == 0);
    auto rows = csv_rows(slurp(out + "/profile.csv"));
    REQUIRE(rows.size() == 4097);
    double cmax = 0.0, cmin = 10.0;
    for (size_t i = 1; i < rows.size(); ++i) {
        double c = std::strtod(rows[i][1].c_str(), nullptr);
        cmax = std::max(cmax, c);
        cmin = std::min(cmin, c);
    }
    CHECK(cmax == Catch::Approx(4.0).margin(1e-9));  // crest on-grid
    CHECK(cmin >= 1.5);
    CHECK(cmin < 1.5 + 1e-4);

    std::string out2 = fresh_dir("prof05");
    rc = run_cmd(std::string("profile --beta 0.5 --grid 4096 --alpha ") + kGridAlpha +
                 " --out " + out2);
    REQUIRE(rc == 0);
    auto rows2 = csv_rows(slurp(out2 + "/profile.csv"));
    double cmax2 = 0.0;
    for (size_t i = 1; i < rows2.size(); ++i)
        cmax2 = std::max(cmax2, std::strtod(rows2[i][1].c_str(), nullptr));
    CHECK(cmax2 == Catch::Approx(2.75).margin(1e-9));
}

TEST_CASE("verify rejects lambda without an admissible window") {
    std::string out = fresh_dir("verify100");
    int rc = run_cmd("verify --lambda 100 --out " + out);
    CHECK(rc == 2);
}

TEST_CASE("config errors exit with code 2") {
    std::string out = fresh_dir("cfgerr");
    fs::create_directories(out);

    spit(out + "/unknown.json", "{\"lamda\": 1000}\n");
    CHECK(run_cmd("attractor --config " + out + "/unknown.json --out " + out) == 2);

    spit(out + "/broken.json", "{ not json\n");
    CHECK(run_cmd("attractor --config " + out + "/broken.json --out " + out) == 2);

    CHECK(run_cmd("attractor --config " + out + "/missing.json --out " + out) == 2);

    CHECK(run_cmd("attractor --alpha nowhere --out " + out) == 2);
}

TEST_CASE("sweep with no usable records exits with a runtime error") {
    std::string out = fresh_dir("sweepempty");
    fs::create_directories(out);
    spit(out + "/cfg.json",
         std::string("{\"alpha\": ") + kGridAlpha + ", \"beta_grid\": [1.5]}\n");
    CHECK(run_cmd("sweep --config " + out + "/cfg.json --out " + out) == 1);
}

TEST_CASE("manifest reruns reproduce the original output") {
    std::string d1 = fresh_dir("manifest1");
    std::string d2 = fresh_dir("manifest2");
    fs::create_directories(kRoot);
    spit(kRoot + "/repro_cfg.json",
         std::string("{\"beta\": 0.5, \"grid_n\": 32, \"alpha\": ") + kGridAlpha +
             ", \"depth\": 64}\n");
    REQUIRE(run_cmd("attractor --config " + kRoot + "/repro_cfg.json --out " + d1) == 0);
    REQUIRE(run_cmd("attractor --config " + d1 + "/manifest.json --out " + d2) == 0);
    CHECK(slurp(d1 + "/curve.csv") == slurp(d2 + "/curve.csv"));
}

TEST_CASE("sweep output is byte-identical across thread counts") {
    fs::create_directories(kRoot);
    std::string cfg = kRoot + "/sweep_cfg.json";
    spit(cfg, std::string("{\"alpha\": ") + kGridAlpha +
                  ", \"beta_grid\": [0.9990234375, 0.99951171875, 0.999755859375, "
                  "0.9998779296875], \"grid_n\": 128, \"lyap_n\": 2000, "
                  "\"lyap_burn\": 200, \"lyap_starts\": 2}\n");

    std::string s1 = fresh_dir("sweep_t1");
    std::string s2 = fresh_dir("sweep_t2");
    std::string s3 = fresh_dir("sweep_env");
    REQUIRE(run_cmd("sweep --config " + cfg + " --threads 1 --out " + s1) == 0);
    REQUIRE(run_cmd("sweep --config " + cfg + " --threads 2 --out " + s2) == 0);
    REQUIRE(run_cmd_env("TCLAB_THREADS=3", "sweep --config " + cfg + " --out " + s3) == 0);

    std::string ref = slurp(s1 + "/sweep.csv");
    CHECK(slurp(s2 + "/sweep.csv") == ref);
    CHECK(slurp(s3 + "/sweep.csv") == ref);
    CHECK(slurp(s2 + "/fits.json") == slurp(s1 + "/fits.json"));

    // Sanity on content: betas ascend, deltas shrink toward beta = 1.
    auto rows = csv_rows(ref);
    REQUIRE(rows.size() == 5);
    double prev_beta = 0.0, prev_delta = 1.0;
    for (size_t i = 1; i < rows.size(); ++i) {
        double beta = std::strtod(rows[i][0].c_str(), nullptr);
        double delta = std::strtod(rows[i][2].c_str(), nullptr);
        CHECK(beta > prev_beta);
        CHECK(delta > 0.0);
        CHECK(delta < prev_delta);
        prev_beta = beta;
        prev_delta = delta;
    }
}

TEST_CASE("missing subcommand or bad flags fail") {
    CHECK(run_cmd("") != 0);
    CHECK(run_cmd("frobnicate") != 0);
    CHECK(run_cmd("attractor --no-such-flag 1") != 0);
}
