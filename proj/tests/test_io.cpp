#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "covest/io.hpp"

using namespace covest;
using namespace covest::io;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("covest_io_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("matrix csv round trip at full precision") {
    TempDir tmp;
    Matrix m(2, 3);
    m << 1.0, 1.0 / 3.0, -2.5e-17, 0.1, 7.0, 1e300;
    const auto file = tmp.path / "m.csv";
    write_matrix_csv(file.string(), m);
    const Matrix back = read_matrix_csv(file.string());
    REQUIRE(back.rows() == 2);
    REQUIRE(back.cols() == 3);
    CHECK((back - m).norm() == 0.0);  // 17 significant digits round-trip doubles
}

TEST_CASE("csv parse errors carry line numbers") {
    TempDir tmp;
    const auto file = tmp.path / "bad.csv";
    write_text(file.string(), "1,2\n3,oops\n");
    try {
        read_matrix_csv(file.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }

    write_text(file.string(), "1,2\n3\n");
    try {
        read_matrix_csv(file.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }

    CHECK_THROWS_AS(read_matrix_csv((tmp.path / "missing.csv").string()), std::runtime_error);
}

TEST_CASE("points csv enforces a single column") {
    TempDir tmp;
    const auto file = tmp.path / "p.csv";
    write_text(file.string(), "0.1\n0.5\n0.9\n");
    const auto pts = read_points_csv(file.string());
    REQUIRE(pts.size() == 3);
    CHECK(pts[1] == doctest::Approx(0.5));

    write_text(file.string(), "0.1,0.2\n");
    CHECK_THROWS_AS(read_points_csv(file.string()), ParseError);
}

TEST_CASE("blank lines and trailing newline handling") {
    TempDir tmp;
    const auto file = tmp.path / "m.csv";
    write_text(file.string(), "1,2\n\n3,4\n");
    const Matrix m = read_matrix_csv(file.string());
    REQUIRE(m.rows() == 2);
    CHECK(m(1, 1) == 4.0);
}

TEST_CASE("serialization format uses up to 17 significant digits") {
    TempDir tmp;
    Matrix m(1, 1);
    m << 0.1;
    const auto file = tmp.path / "m.csv";
    write_matrix_csv(file.string(), m);
    CHECK(slurp(file) == "0.10000000000000001\n");
}
