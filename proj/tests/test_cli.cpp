// Integration tests driving the command-line binary named by SETSTAT_CLI.
#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

using nlohmann::json;

namespace {

std::string cli_path() {
    const char* env = std::getenv("SETSTAT_CLI");
    REQUIRE(env != nullptr);
    return env;
}

std::filesystem::path work_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "setstat_cli_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path write_file(const std::string& name, const std::string& content) {
    const auto path = work_dir() / name;
    std::ofstream(path) << content;
    return path;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_cli(const std::string& args, std::string* stdout_text = nullptr) {
    const auto out = work_dir() / "stdout.txt";
    const std::string cmd =
        cli_path() + " " + args + " > " + out.string() + " 2> " +
        (work_dir() / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    if (stdout_text) *stdout_text = slurp(out);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

const std::string three_rows = "L,U,x1\n0,1,0\n1,2,1\n2,3,2\n";
const std::string law_rows = "L,U,x1\n-1,2,-2\n0,0,0\n0,0,0\n1,6,2\n";

}  // namespace

TEST_CASE("mean command writes the endpoint averages") {
    const auto input = write_file("mean3.csv", three_rows);
    const auto output = work_dir() / "mean3.json";
    REQUIRE(run_cli("mean --input " + input.string() + " --output " + output.string()) == 0);
    const json j = json::parse(slurp(output));
    CHECK(j["body"]["kind"] == "interval");
    CHECK(j["body"]["lower"] == 1.0);
    CHECK(j["body"]["upper"] == 2.0);
    CHECK(j["diagnostics"]["in_cone"] == true);
}

TEST_CASE("mean of a single row is that row") {
    const auto input = write_file("mean1.csv", "L,U,x1\n-0.5,2.5,0\n");
    const auto output = work_dir() / "mean1.json";
    REQUIRE(run_cli("mean --input " + input.string() + " --output " + output.string()) == 0);
    const json j = json::parse(slurp(output));
    CHECK(j["body"]["lower"] == -0.5);
    CHECK(j["body"]["upper"] == 2.5);
}

TEST_CASE("invalid rows exit with the geometry code and name the row") {
    const auto input = write_file("badrow.csv", "L,U,x1\n0,1,0\n5,2,1\n");
    const auto output = work_dir() / "badrow.json";
    CHECK(run_cli("mean --input " + input.string() + " --output " + output.string()) == 3);
    CHECK(slurp(work_dir() / "stderr.txt").find("line 3") != std::string::npos);
}

TEST_CASE("parse failures exit with code 2") {
    const auto input = write_file("badnum.csv", "L,U,x1\n0,1,zero\n");
    const auto output = work_dir() / "badnum.json";
    CHECK(run_cli("mean --input " + input.string() + " --output " + output.string()) == 2);
    CHECK(run_cli("mean --no-such-flag") == 2);
    CHECK(run_cli("simulate gfr-rate --config /nonexistent.json --out x") == 2);
}

TEST_CASE("regression command reproduces the signed-weight law") {
    const auto input = write_file("law.csv", law_rows);
    const auto output = work_dir() / "law.json";
    REQUIRE(run_cli("gfr --input " + input.string() + " --predict-at 2 --output " +
                    output.string()) == 0);
    const json j = json::parse(slurp(output));
    CHECK(j["body"]["lower"].get<double>() == 1.0);
    CHECK(j["body"]["upper"].get<double>() == 4.0);
    CHECK(j["support_values"][0].get<double>() == -1.0);
    CHECK(j["support_values"][1].get<double>() == 4.0);
    CHECK(j["aumann"]["lower"].get<double>() == 0.25);
    CHECK(j["aumann"]["upper"].get<double>() == 4.75);
    CHECK(j["diagnostics"]["subset_flag"] == true);
}

TEST_CASE("regression at the mean covariate matches the mean command") {
    const auto input = write_file("law2.csv", law_rows);
    const auto gfr_out = work_dir() / "law_gfr.json";
    const auto mean_out = work_dir() / "law_mean.json";
    REQUIRE(run_cli("gfr --input " + input.string() + " --predict-at 0 --output " +
                    gfr_out.string()) == 0);
    REQUIRE(run_cli("mean --input " + input.string() + " --output " + mean_out.string()) ==
            0);
    const json a = json::parse(slurp(gfr_out));
    const json b = json::parse(slurp(mean_out));
    CHECK(a["body"] == b["body"]);
}

TEST_CASE("constant designs exit with the numerical code") {
    const auto input = write_file("const.csv", "L,U,x1\n0,1,3\n1,2,3\n2,3,3\n");
    const auto output = work_dir() / "const.json";
    CHECK(run_cli("gfr --input " + input.string() + " --predict-at 1 --output " +
                  output.string()) == 4);
}

TEST_CASE("fully observed weighting equals the mean command") {
    const auto input = write_file("ipw1.csv", "L,U,x1,t\n0,1,0,1\n1,2,1,1\n2,3,2,1\n");
    const auto ipw_out = work_dir() / "ipw1.json";
    const auto mean_out = work_dir() / "ipw1_mean.json";
    REQUIRE(run_cli("ipw --input " + input.string() + " --propensity known --output " +
                    ipw_out.string()) == 2);  // known mode needs an e column
    REQUIRE(run_cli("mean --input " + input.string() + " --output " + mean_out.string()) ==
            0);
    const json b = json::parse(slurp(mean_out));

    // default logistic mode has nothing to fit when every row is observed
    REQUIRE(run_cli("ipw --input " + input.string() + " --output " + ipw_out.string()) ==
            0);
    CHECK(json::parse(slurp(ipw_out))["body"] == b["body"]);

    const auto with_e = write_file(
        "ipw1e.csv", "L,U,x1,t,e\n0,1,0,1,0.5\n1,2,1,1,0.5\n2,3,2,1,0.5\n");
    REQUIRE(run_cli("ipw --input " + with_e.string() + " --propensity known --output " +
                    ipw_out.string()) == 0);
    const json a = json::parse(slurp(ipw_out));
    CHECK(a["body"] == b["body"]);
    CHECK(a.contains("unnormalized"));
    CHECK(a["propensity"]["kind"] == "known");
}

TEST_CASE("instrumented regression runs through the eiv flag") {
    const auto input = write_file("eiv.csv",
                                  "L,U,x1,z1\n0,1,0,0\n1,2,1,1\n2,3,2,2\n3,4,3,3\n");
    const auto output = work_dir() / "eiv.json";
    REQUIRE(run_cli("gfr --input " + input.string() + " --predict-at 1.5 --eiv --output " +
                    output.string()) == 0);
    const json j = json::parse(slurp(output));
    CHECK(j["body"]["kind"] == "interval");
    // z = x means the fit matches the plain one
    const auto plain_out = work_dir() / "eiv_plain.json";
    REQUIRE(run_cli("gfr --input " + input.string() + " --predict-at 1.5 --output " +
                    plain_out.string()) == 0);
    CHECK(j["body"] == json::parse(slurp(plain_out))["body"]);
    // eiv needs the z columns
    const auto no_z = write_file("eiv_noz.csv", "L,U,x1\n0,1,0\n1,2,1\n2,3,2\n");
    CHECK(run_cli("gfr --input " + no_z.string() + " --predict-at 1.5 --eiv --output " +
                  output.string()) == 4);
}

TEST_CASE("polygon datasets flow through the mean command") {
    const auto input = write_file(
        "poly.jsonl",
        R"({"vertices": [[1,1],[-1,1],[-1,-1],[1,-1]], "x": [0]})"
        "\n"
        R"({"vertices": [[2,2],[0,2],[0,0],[2,0]], "x": [1]})"
        "\n"
        R"({"vertices": [[1,1],[-1,1],[-1,-1],[1,-1]], "x": [2]})"
        "\n");
    const auto output = work_dir() / "poly_mean.json";
    REQUIRE(run_cli("mean --input " + input.string() + " --grid 64 --output " +
                    output.string()) == 0);
    const json j = json::parse(slurp(output));
    CHECK(j["body"]["kind"] == "polygon");
    CHECK(j["grid"]["size"] == 64);
    // mean of two unit squares and one shifted square: centroid (1/3, 1/3)
    double max_x = -10;
    for (const auto& v : j["body"]["vertices"]) max_x = std::max(max_x, v[0].get<double>());
    CHECK(std::abs(max_x - (1.0 + 1.0 / 3.0)) < 1e-9);
}

TEST_CASE("constant known scores with masking average the observed rows") {
    const auto input = write_file(
        "ipw2.csv",
        "L,U,x1,t,e\n0,1,0,1,0.5\n10,11,1,0,0.5\n2,3,2,1,0.5\n20,21,3,0,0.5\n");
    const auto output = work_dir() / "ipw2.json";
    REQUIRE(run_cli("ipw --input " + input.string() + " --propensity known --output " +
                    output.string()) == 0);
    const json j = json::parse(slurp(output));
    CHECK(j["body"]["lower"].get<double>() == 1.0);  // mean of [0,1] and [2,3]
    CHECK(j["body"]["upper"].get<double>() == 2.0);
}

TEST_CASE("single-class indicators exit with the numerical code") {
    const auto input = write_file("ipw3.csv", "L,U,x1,t\n0,1,0,0\n1,2,1,0\n2,3,2,0\n");
    const auto output = work_dir() / "ipw3.json";
    CHECK(run_cli("ipw --input " + input.string() + " --output " + output.string()) == 4);
}

TEST_CASE("distance command prints twelve significant digits") {
    const auto a = write_file("a.json", R"({"kind":"interval","lower":0,"upper":1})");
    const auto b = write_file("b.json", R"({"kind":"interval","lower":2,"upper":5})");
    std::string out;
    REQUIRE(run_cli("dist --metric hausdorff " + a.string() + " " + b.string(), &out) == 0);
    CHECK(std::stod(out) == 4.0);
    REQUIRE(run_cli("dist --metric dkc " + a.string() + " " + b.string(), &out) == 0);
    CHECK(std::abs(std::stod(out) - std::sqrt(20.0)) < 1e-9);
    CHECK(out.find("4.4721359") != std::string::npos);
    REQUIRE(run_cli("dist --metric dkc " + a.string() + " " + a.string(), &out) == 0);
    CHECK(std::stod(out) == 0.0);

    const auto poly = write_file("poly.json",
                                 R"({"kind":"polygon","vertices":[[1,1],[-1,1],[-1,-1],[1,-1]]})");
    CHECK(run_cli("dist --metric dkc " + a.string() + " " + poly.string()) == 3);
}

TEST_CASE("simulation runs are deterministic and well-shaped") {
    const std::string config = R"({
      "seed": 7,
      "dgp": "interval-linear",
      "sample_sizes": [100, 200],
      "replications": 10,
      "center_coef": [1.0],
      "radius_coef": [0.0],
      "radius_base": 1.0,
      "center_noise": 0.5,
      "radius_noise": 0.25,
      "probe_points": [[-0.5], [0.0], [0.5]]
    })";
    const auto cfg = write_file("sim.json", config);
    const auto p1 = work_dir() / "sim_run1";
    const auto p2 = work_dir() / "sim_run2";
    REQUIRE(run_cli("simulate gfr-rate --config " + cfg.string() + " --out " +
                    p1.string()) == 0);
    REQUIRE(run_cli("simulate gfr-rate --config " + cfg.string() + " --out " +
                    p2.string()) == 0);
    for (const char* suffix : {".csv", ".summary.json", ".plot.csv"}) {
        const std::string f1 = slurp(p1.string() + suffix);
        const std::string f2 = slurp(p2.string() + suffix);
        REQUIRE(!f1.empty());
        REQUIRE(f1 == f2);
    }
    std::istringstream csv(slurp(p1.string() + ".csv"));
    std::string line;
    int rows = -1;  // header
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 20);
}

TEST_CASE("golden missing-data run is reproduced byte for byte") {
    const char* data_dir = std::getenv("SETSTAT_DATA_DIR");
    REQUIRE(data_dir != nullptr);
    const auto fixture = std::filesystem::path(data_dir) / "mar_seed7.csv";
    const auto golden = std::filesystem::path(data_dir) / "mar_seed7.golden.json";
    REQUIRE(std::filesystem::exists(fixture));
    REQUIRE(std::filesystem::exists(golden));
    const auto output = work_dir() / "mar_seed7.json";
    REQUIRE(run_cli("ipw --input " + fixture.string() + " --output " + output.string()) ==
            0);
    CHECK(slurp(output) == slurp(golden));
}

TEST_CASE("outcome binning builds an interval dataset") {
    const auto raw = write_file("raw.csv", "y,x\n0,1\n3,2\n10,3\n");
    const auto out = work_dir() / "binned.csv";
    REQUIRE(run_cli("intervals --input " + raw.string() + " --outcome y --bins 5 --output " +
                    out.string()) == 0);
    const std::string text = slurp(out);
    CHECK(text.find("L,U,x1") == 0);
    CHECK(text.find("2,4") != std::string::npos);  // value 3 lands in (2, 4]
}
