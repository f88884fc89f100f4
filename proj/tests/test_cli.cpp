#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavityeo/manifest.hpp"

using nlohmann::json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

std::string cli_binary() {
    if (const char* env = std::getenv("CAVITYEO_CLI")) return env;
    return "./tools/cavityeo";
}

CliResult run_cli(const std::string& args) {
    CliResult result;
    const std::string command = cli_binary() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char chunk[4096];
    while (std::fgets(chunk, sizeof(chunk), pipe) != nullptr) {
        result.out += chunk;
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string scratch_dir() {
    static int counter = 0;
    std::string dir = "cli_scratch_" + std::to_string(counter++);
    std::filesystem::create_directories(dir);
    return dir;
}

// minimal CSV reader: rows of string fields
std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(path);
    REQUIRE(in);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

TEST_CASE("eval: quoted operating points land in their bands") {
    const CliResult low_t = run_cli("eval --kappa 4 --gamma 1 --gamma-p 0.1 --delta 5");
    REQUIRE(low_t.exit_code == 0);
    const json r1 = json::parse(low_t.out);
    CHECK(r1["engine"] == "long-pulse");
    CHECK(std::abs(r1["fidelity"].get<double>() - 0.961) < 0.005);
    CHECK(std::abs(r1["probability"].get<double>() - 0.00126) < 0.0001);

    const CliResult mid = run_cli("eval --kappa 1 --gamma 0 --gamma-p 2 --delta 0");
    const json r2 = json::parse(mid.out);
    CHECK(r2["fidelity"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r2["probability"].get<double>() ==
          doctest::Approx(0.09375).epsilon(1e-12));

    const CliResult clean = run_cli("eval --gamma-p 0 --kappa 3 --gamma 1 --delta 2");
    const json r3 = json::parse(clean.out);
    CHECK(r3["t_i_sq"].get<double>() == 0.0);
    CHECK(r3["fidelity"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eval emits exactly one JSON line") {
    const CliResult r = run_cli("eval --kappa 2 --gamma 2 --gamma-p 2 --delta 9");
    REQUIRE(r.exit_code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
    CHECK_NOTHROW(json::parse(r.out));
}

TEST_CASE("exit-code contract") {
    CHECK(run_cli("eval --kappa 1").exit_code == 2);          // missing flags
    CHECK(run_cli("nonsense").exit_code == 2);                // bad subcommand
    CHECK(run_cli("eval --kappa 1 --gamma 0 --gamma-p -1 --delta 0").exit_code ==
          2);  // invalid rate
    const CliResult degenerate =
        run_cli("eval --kappa 0 --gamma 0 --gamma-p 1 --delta 0");
    CHECK(degenerate.exit_code == 3);
    const json err = json::parse(degenerate.out);
    CHECK(err["error"]["type"] == "degenerate-response");
    CHECK(run_cli("reproduce --figure fig3 --out-dir /dev/null/x").exit_code == 4);
    CHECK(run_cli("--version").exit_code == 0);
}

TEST_CASE("sample: forced probability and reproducibility") {
    const CliResult forced = run_cli("sample --force-p 1 --trials 64 --seed 9");
    REQUIRE(forced.exit_code == 0);
    const json r = json::parse(forced.out);
    CHECK(r["mean_attempts"].get<double>() == 1.0);

    const std::string args =
        "sample --kappa 2 --gamma 2 --gamma-p 2 --delta 9 --trials 20000 --seed 1";
    const CliResult a = run_cli(args);
    const CliResult b = run_cli(args);
    CHECK(a.out == b.out);
    const json stats = json::parse(a.out);
    // mean attempts ~ 1/P = 674 within the 3-sigma geometric band
    CHECK(std::abs(stats["mean_attempts"].get<double>() - 674.0) < 25.0);
}

TEST_CASE("oracle-check: deterministic reports, tolerance override fails") {
    const CliResult a = run_cli("oracle-check --seed 7 --draws 4");
    const CliResult b = run_cli("oracle-check --seed 7 --draws 4");
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    const json report = json::parse(a.out);
    CHECK(report["all_pass"] == true);
    CHECK(report["checks"].size() >= 10);

    const CliResult strict = run_cli("oracle-check --seed 7 --draws 2 --tol 1e-15");
    CHECK(strict.exit_code == 1);
    CHECK(json::parse(strict.out)["all_pass"] == false);
}

TEST_CASE("sweep: CSV, manifest digests and config replay") {
    const std::string dir = scratch_dir();
    const std::string out = dir + "/grid.csv";
    const std::string args =
        "sweep --gamma 2 --gamma-p 2 --x-axis kappa --x-min 0.5 --x-max 4 "
        "--x-count 6 --x-scale log --y-axis delta --y-min 0 --y-max 10 "
        "--y-count 5 --out " + out;
    const CliResult r = run_cli(args);
    REQUIRE(r.exit_code == 0);
    const json summary = json::parse(r.out);
    CHECK(summary["cells"] == 30);
    CHECK(summary["errors"] == 0);

    const auto rows = read_csv(out);
    REQUIRE(rows.size() == 31);
    CHECK(rows[0] == std::vector<std::string>{"kappa", "delta", "fidelity",
                                              "probability", "t_e_re", "t_e_im",
                                              "t_i_sq"});

    const json manifest = json::parse(slurp(out + ".manifest.json"));
    CHECK(manifest["command"] == "sweep");
    CHECK(manifest["outputs"][0]["sha256"] ==
          cavityeo::sha256_hex_of_file(out));

    // replaying the manifest through --config reproduces the CSV bit for bit
    const std::string replay_out = dir + "/replay.csv";
    const CliResult replay = run_cli("sweep --config " + out + ".manifest.json" +
                                     " --out " + replay_out);
    REQUIRE(replay.exit_code == 0);
    CHECK(slurp(replay_out) == slurp(out));
}

TEST_CASE("pulse-scan saturates at the long-pulse limit") {
    const std::string dir = scratch_dir();
    const std::string out = dir + "/scan.csv";
    const CliResult r = run_cli(
        "pulse-scan --kappa 1 --gamma 0 --gamma-p 0 --delta 0 --l-min 10 "
        "--l-max 1000 --l-count 5 --out " + out);
    REQUIRE(r.exit_code == 0);
    const auto rows = read_csv(out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0][0] == "pulse_length");
    const double p_last = std::stod(rows[5][3]);
    CHECK(p_last == doctest::Approx(0.125).epsilon(1e-2));
}

TEST_CASE("contour subcommand writes refined iso-lines") {
    const std::string dir = scratch_dir();
    const std::string out = dir + "/contours.json";
    const CliResult r = run_cli(
        "contour --gamma 2 --gamma-p 2 --x-axis kappa --x-min 0.5 --x-max 6 "
        "--x-count 24 --x-scale log --y-axis delta --y-min 0 --y-max 14 "
        "--y-count 24 --field fidelity --level 0.9 --out " + out);
    REQUIRE(r.exit_code == 0);
    const json contours = json::parse(slurp(out));
    CHECK(contours["field"] == "fidelity");
    REQUIRE(!contours["lines"].empty());
    bool near_operating_point = false;
    for (const auto& line : contours["lines"]) {
        for (const auto& pt : line["points"]) {
            if (std::abs(pt[0].get<double>() - 2.0) < 0.15 &&
                std::abs(pt[1].get<double>() - 9.0) < 0.4) {
                near_operating_point = true;
            }
        }
    }
    CHECK(near_operating_point);
}

TEST_CASE("threshold-kappa and optimal-delta records") {
    const CliResult threshold = run_cli(
        "threshold-kappa --gamma 2 --gamma-p 2 --delta 0 --target-f 0.9");
    REQUIRE(threshold.exit_code == 0);
    const json t = json::parse(threshold.out);
    CHECK(std::abs(t["kappa_star"].get<double>() - 0.59) < 0.01);

    const CliResult unbounded = run_cli(
        "threshold-kappa --gamma 1 --gamma-p 0 --delta 0 --target-f 0.9");
    CHECK(unbounded.exit_code == 3);
    CHECK(json::parse(unbounded.out)["error"]["type"] == "bracket");

    const CliResult optimal = run_cli(
        "optimal-delta --kappa 2 --gamma 2 --gamma-p 2 --min-p 0.001484");
    REQUIRE(optimal.exit_code == 0);
    const json o = json::parse(optimal.out);
    CHECK(o["feasible"] == true);
    CHECK(std::abs(o["delta_star"].get<double>() - 9.0) < 0.05);
    CHECK(o["fidelity"].get<double>() >= 0.9);

    const CliResult infeasible = run_cli(
        "optimal-delta --kappa 2 --gamma 2 --gamma-p 2 --min-p 0.2");
    CHECK(infeasible.exit_code == 1);
    CHECK(json::parse(infeasible.out)["feasible"] == false);
}

TEST_CASE("reproduce: fig3 grid carries the detuned operating point") {
    const std::string dir = scratch_dir();
    const CliResult r = run_cli("reproduce --figure fig3 --out-dir " + dir);
    REQUIRE(r.exit_code == 0);
    const auto rows = read_csv(dir + "/fig3_grid.csv");
    REQUIRE(rows.size() == 1 + 200 * 200);
    double best_gap = 1e9;
    double f_at_point = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double kappa = std::stod(rows[i][0]);
        const double delta = std::stod(rows[i][1]);
        const double gap = std::abs(kappa - 2.0) + std::abs(delta - 9.0);
        if (gap < best_gap) {
            best_gap = gap;
            f_at_point = std::stod(rows[i][2]);
        }
    }
    CHECK(std::abs(f_at_point - 0.901) < 0.005);

    const json manifest = json::parse(slurp(dir + "/fig3_manifest.json"));
    CHECK(manifest["outputs"].size() == 2);
}

TEST_CASE("reproduce: figA3 F=0.9 contour passes the relaxed cavity condition") {
    const std::string dir = scratch_dir();
    const CliResult r = run_cli("reproduce --figure figA3 --out-dir " + dir);
    REQUIRE(r.exit_code == 0);
    const json contours = json::parse(slurp(dir + "/figA3_contours.json"));
    double best_gap = 1e9;
    double kappa_at_gamma2 = 0.0;
    for (const auto& line : contours["lines"]) {
        if (line["level"].get<double>() != 0.9) continue;
        for (const auto& pt : line["points"]) {
            const double gap = std::abs(pt[1].get<double>() - 2.0);
            if (gap < best_gap) {
                best_gap = gap;
                kappa_at_gamma2 = pt[0].get<double>();
            }
        }
    }
    REQUIRE(best_gap < 0.05);
    CHECK(std::abs(kappa_at_gamma2 - 0.59) < 0.02);
}

TEST_CASE("reproduce: figA2 success probability saturates for every kappa") {
    const std::string dir = scratch_dir();
    const CliResult r = run_cli("reproduce --figure figA2 --out-dir " + dir);
    REQUIRE(r.exit_code == 0);
    const auto rows = read_csv(dir + "/figA2a_grid.csv");
    REQUIRE(rows.size() > 1);
    double l_max = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        l_max = std::max(l_max, std::stod(rows[i][0]));
    }
    int saturated = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (std::stod(rows[i][0]) == l_max) {
            CHECK(std::stod(rows[i][3]) == doctest::Approx(0.125).epsilon(1e-2));
            ++saturated;
        }
    }
    CHECK(saturated == 4);  // kappa in {0.5, 1, 2, 4}

    // fidelity figure uses the dissipative set; rows must be populated
    const auto rows_b = read_csv(dir + "/figA2b_grid.csv");
    REQUIRE(rows_b.size() == rows.size());
    for (std::size_t i = 1; i < rows_b.size(); ++i) {
        CHECK(!rows_b[i][2].empty());
    }
}
