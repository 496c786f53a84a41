#include <doctest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "covest/io.hpp"

using namespace covest;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("covest_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(COVEST_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_fixture(const TempDir& tmp) {
    io::write_text((tmp.path / "points.csv").string(), "0.125\n0.375\n0.625\n0.875\n");
    // 6 replications at 4 points
    io::write_text((tmp.path / "data.csv").string(),
                   "1.0,0.5,-0.2,0.1\n"
                   "-0.3,1.2,0.4,-0.5\n"
                   "0.7,-0.1,0.9,0.3\n"
                   "-1.1,0.2,-0.6,0.8\n"
                   "0.4,0.9,-0.3,-0.2\n"
                   "0.2,-0.7,0.5,0.6\n");
}

}  // namespace

TEST_CASE("estimate writes sigma_hat, psi_hat and result.json") {
    TempDir tmp;
    write_fixture(tmp);
    io::write_text((tmp.path / "config.json").string(), R"({
        "basis": {"kind": "fourier", "a": 0.0, "b": 1.0, "max_size": 8},
        "model": 3,
        "points": ")" + (tmp.path / "points.csv").string() + R"(",
        "data": ")" + (tmp.path / "data.csv").string() + R"(",
        "output_dir": ")" + tmp.path.string() + R"("
    })");
    CHECK(run("estimate --config " + (tmp.path / "config.json").string()) == 0);
    const Matrix sigma = io::read_matrix_csv((tmp.path / "sigma_hat.csv").string());
    CHECK(sigma.rows() == 4);
    CHECK(sigma.cols() == 4);
    CHECK((sigma - sigma.transpose()).norm() <= 1e-14 * (1 + sigma.norm()));
    const Matrix psi = io::read_matrix_csv((tmp.path / "psi_hat.csv").string());
    CHECK(psi.rows() == 3);
    const std::string result = slurp(tmp.path / "result.json");
    CHECK(result.find("\"command\": \"estimate\"") != std::string::npos);
    CHECK(result.find("design_rank") != std::string::npos);
}

TEST_CASE("malformed data row exits 2 and names the line") {
    TempDir tmp;
    write_fixture(tmp);
    io::write_text((tmp.path / "data.csv").string(), "1,2,3,4\n1,2,bad,4\n");
    io::write_text((tmp.path / "config.json").string(), R"({
        "basis": {"kind": "fourier"},
        "model": 1,
        "points": ")" + (tmp.path / "points.csv").string() + R"(",
        "data": ")" + (tmp.path / "data.csv").string() + R"(",
        "output_dir": ")" + tmp.path.string() + R"("
    })");
    const std::string cmd = std::string(COVEST_BIN) + " estimate --config " +
                            (tmp.path / "config.json").string() + " 2>" +
                            (tmp.path / "err.txt").string();
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 2);
    const std::string err = slurp(tmp.path / "err.txt");
    CHECK(err.find("line 2") != std::string::npos);
}

TEST_CASE("missing config and bad flags exit 2") {
    TempDir tmp;
    CHECK(run("estimate --config " + (tmp.path / "nope.json").string()) == 2);
    CHECK(run("estimate") != 0);  // --config is required
    CHECK(run("frobnicate --config x.json") != 0);
}

TEST_CASE("select writes a selection table with a single chosen row") {
    TempDir tmp;
    write_fixture(tmp);
    io::write_text((tmp.path / "config.json").string(), R"({
        "basis": {"kind": "fourier"},
        "model_sizes": [1, 2, 3],
        "theta": 1.0,
        "points": ")" + (tmp.path / "points.csv").string() + R"(",
        "data": ")" + (tmp.path / "data.csv").string() + R"(",
        "output_dir": ")" + tmp.path.string() + R"("
    })");
    CHECK(run("select --config " + (tmp.path / "config.json").string()) == 0);
    const std::string table = slurp(tmp.path / "selection_table.csv");
    CHECK(table.rfind("model_id,m,D_m,delta_sq,contrast,pen,criterion,chosen\n", 0) == 0);
    int chosen = 0, rows = 0;
    std::istringstream in(table);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        ++rows;
        if (!line.empty() && line.back() == '1') ++chosen;
    }
    CHECK(rows == 3);
    CHECK(chosen == 1);
}

TEST_CASE("eval reproduces sigma_hat at the design points") {
    TempDir tmp;
    write_fixture(tmp);
    io::write_text((tmp.path / "config.json").string(), R"({
        "basis": {"kind": "fourier"},
        "model": 2,
        "points": ")" + (tmp.path / "points.csv").string() + R"(",
        "data": ")" + (tmp.path / "data.csv").string() + R"(",
        "output_dir": ")" + tmp.path.string() + R"("
    })");
    REQUIRE(run("estimate --config " + (tmp.path / "config.json").string()) == 0);
    io::write_text((tmp.path / "pairs.csv").string(), "0.125,0.375\n0.625,0.625\n");
    io::write_text((tmp.path / "eval.json").string(), R"({
        "result": ")" + (tmp.path / "result.json").string() + R"(",
        "pairs": ")" + (tmp.path / "pairs.csv").string() + R"(",
        "output_dir": ")" + tmp.path.string() + R"(",
        "output": "cov_pairs.csv"
    })");
    REQUIRE(run("eval --config " + (tmp.path / "eval.json").string()) == 0);
    const std::string out = slurp(tmp.path / "cov_pairs.csv");
    CHECK(out.rfind("s,t,sigma_hat\n", 0) == 0);
    const Matrix sigma = io::read_matrix_csv((tmp.path / "sigma_hat.csv").string());
    std::istringstream in(out);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    const double v01 = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(v01 == doctest::Approx(sigma(0, 1)).epsilon(1e-12));

    // out-of-domain pair exits 2 and names the pair
    io::write_text((tmp.path / "pairs.csv").string(), "0.1,0.2\n2.0,0.2\n");
    CHECK(run("eval --config " + (tmp.path / "eval.json").string()) == 2);
}

TEST_CASE("simulate reruns are byte-identical across thread counts") {
    TempDir tmp;
    io::write_text((tmp.path / "config.json").string(), R"({
        "experiment": "risk_decomposition",
        "process": {"kind": "kl_process", "alpha": 1.0, "truncation": 16,
                    "basis": {"kind": "fourier"}},
        "n": 4, "N": 60, "R": 20,
        "model_sizes": [1, 3],
        "seed": 7,
        "output_dir": ")" + tmp.path.string() + R"("
    })");
    const std::string cfg = (tmp.path / "config.json").string();
    REQUIRE(run("simulate --config " + cfg + " --threads 1") == 0);
    const std::string report1 = slurp(tmp.path / "report.json");
    const std::string plot1 = slurp(tmp.path / "plotdata_risk_decomposition.csv");
    REQUIRE(run("simulate --config " + cfg + " --threads 4") == 0);
    CHECK(slurp(tmp.path / "report.json") == report1);
    CHECK(slurp(tmp.path / "plotdata_risk_decomposition.csv") == plot1);
    CHECK(report1.find("\"all_pass\": true") != std::string::npos);

    // --seed override changes the report
    REQUIRE(run("simulate --config " + cfg + " --seed 8") == 0);
    CHECK(slurp(tmp.path / "report.json") != report1);
}

TEST_CASE("center flag changes the fit for off-center data") {
    TempDir tmp;
    write_fixture(tmp);
    Matrix shifted = io::read_matrix_csv((tmp.path / "data.csv").string());
    shifted.array() += 5.0;
    io::write_matrix_csv((tmp.path / "data.csv").string(), shifted);
    io::write_text((tmp.path / "config.json").string(), R"({
        "basis": {"kind": "fourier"},
        "model": 2,
        "points": ")" + (tmp.path / "points.csv").string() + R"(",
        "data": ")" + (tmp.path / "data.csv").string() + R"(",
        "output_dir": ")" + tmp.path.string() + R"("
    })");
    REQUIRE(run("estimate --config " + (tmp.path / "config.json").string()) == 0);
    const Matrix raw = io::read_matrix_csv((tmp.path / "sigma_hat.csv").string());
    REQUIRE(run("estimate --center --config " + (tmp.path / "config.json").string()) == 0);
    const Matrix centered = io::read_matrix_csv((tmp.path / "sigma_hat.csv").string());
    CHECK((raw - centered).norm() > 1.0);
    CHECK(raw.trace() > centered.trace());  // mean-square shift inflates the diagonal
}
