#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "unidiff/analytic.hpp"
#include "unidiff/io.hpp"

using namespace unidiff;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// drop the generated_at line before comparing payloads
std::string strip_timestamp(const std::string& text) {
    std::string out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("# generated_at:", 0) != 0) out += line + "\n";
    return out;
}

struct TempDir {
    fs::path path;
    TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const char* cli_path() { return std::getenv("UNIDIFF_BIN"); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("format_double is locale-free and round-trips") {
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(-3.0) == "-3");
    const double v = 0.1234567890123456789;
    CHECK(std::stod(io::format_double(v)) == v);
}

TEST_CASE("density csv carries provenance and parses back") {
    TempDir tmp("unidiff_io_test");
    const auto grid = default_theta_grid(1.0, 1.0, 64);
    const auto sol = density(1.0, 1.0, grid);
    const auto path = (tmp.path / "d.csv").string();
    io::write_density_csv(path, sol, {"density", R"({"t":1.0})"});

    const std::string text = slurp(path);
    CHECK(text.rfind("# unidiff v", 0) == 0);
    CHECK(text.find("# config: {\"t\":1.0}") != std::string::npos);
    CHECK(text.find("theta,re_f,im_f,rho\n") != std::string::npos);
    CHECK(text.find("\r\n") == std::string::npos); // LF only

    // row count: header lines + one row per grid point
    std::istringstream in(text);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#' && line[0] != 't') ++rows;
    CHECK(rows == grid.size());
}

TEST_CASE("cli available for end-to-end checks") {
    REQUIRE_MESSAGE(cli_path() != nullptr,
                    "UNIDIFF_BIN must point at the built binary (set by ctest)");
    REQUIRE(fs::exists(cli_path()));
}

TEST_CASE("cli usage errors exit with code 1") {
    CHECK(run_cli("density --t -1") == 1);
    CHECK(run_cli("simulate --n 1 --t 1 --samples 2") == 1);
    CHECK(run_cli("moments --t '' ") == 1);
    CHECK(run_cli("critical --n 64,128 --m2 1 --t 3 --samples 2") == 1);
    CHECK(run_cli("nonsense") == 1);
}

TEST_CASE("cli density runs and is deterministic up to the timestamp") {
    TempDir a("unidiff_cli_a"), b("unidiff_cli_b");
    const std::string common = "density --m2 1 --t 1 --grid-points 128";
    REQUIRE(run_cli(common + " --out-dir " + a.path.string()) == 0);
    REQUIRE(run_cli(common + " --out-dir " + b.path.string()) == 0);
    const auto fa = a.path / "density_t1.csv";
    const auto fb = b.path / "density_t1.csv";
    REQUIRE(fs::exists(fa));
    REQUIRE(fs::exists(fb));
    CHECK(strip_timestamp(slurp(fa)) == strip_timestamp(slurp(fb)));
}

TEST_CASE("cli density honors the m2*t scaling equivalence") {
    TempDir a("unidiff_cli_s1"), b("unidiff_cli_s2");
    REQUIRE(run_cli("density --m2 0.002 --t 2000 --grid-points 128 --out-dir " +
                    a.path.string()) == 0);
    REQUIRE(run_cli("density --m2 1 --t 4 --grid-points 128 --out-dir " +
                    b.path.string()) == 0);
    // rho columns agree line by line to 1e-9
    std::istringstream ia(slurp(a.path / "density_t2000.csv"));
    std::istringstream ib(slurp(b.path / "density_t4.csv"));
    std::string la, lb;
    int compared = 0;
    while (std::getline(ia, la) && std::getline(ib, lb)) {
        if (la.empty() || la[0] == '#' || la[0] == 't') continue;
        const auto rho_a = std::stod(la.substr(la.rfind(',') + 1));
        const auto rho_b = std::stod(lb.substr(lb.rfind(',') + 1));
        CHECK(std::abs(rho_a - rho_b) < 1e-9);
        ++compared;
    }
    CHECK(compared > 100);
}

TEST_CASE("cli simulate writes eigenphases, histograms and a manifest") {
    TempDir tmp("unidiff_cli_sim");
    REQUIRE(run_cli("simulate --family sign --n 24 --m2 1 --t 0,0.5 --samples 4 "
                    "--bins 16 --seed 7 --out-dir " + tmp.path.string()) == 0);
    CHECK(fs::exists(tmp.path / "eigenphases_t0.csv"));
    CHECK(fs::exists(tmp.path / "eigenphases_t0p5.csv"));
    CHECK(fs::exists(tmp.path / "histogram_t0p5.csv"));
    CHECK(fs::exists(tmp.path / "run_manifest.json"));

    const std::string ep = slurp(tmp.path / "eigenphases_t0p5.csv");
    CHECK(ep.find("sample_index,t,theta") != std::string::npos);
    // 4 samples x N=24 rows
    std::istringstream in(ep);
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#' && line[0] != 's') ++rows;
    CHECK(rows == 4 * 24);

    const std::string mani = slurp(tmp.path / "run_manifest.json");
    CHECK(mani.find("\"m_per_unit\"") != std::string::npos);
    CHECK(mani.find("\"version\"") != std::string::npos);
    CHECK(mani.find("\"seed\": 7") != std::string::npos);
}

TEST_CASE("cli simulate is seed-deterministic") {
    TempDir a("unidiff_det_a"), b("unidiff_det_b");
    const std::string common =
        "simulate --family gaussian --n 16 --m2 1 --t 0.5 --samples 3 --bins 16 --seed 11";
    REQUIRE(run_cli(common + " --threads 1 --out-dir " + a.path.string()) == 0);
    REQUIRE(run_cli(common + " --threads 2 --out-dir " + b.path.string()) == 0);
    CHECK(strip_timestamp(slurp(a.path / "eigenphases_t0p5.csv")) ==
          strip_timestamp(slurp(b.path / "eigenphases_t0p5.csv")));
}

TEST_CASE("cli config file with flag overrides") {
    TempDir tmp("unidiff_cfg");
    const auto cfg = tmp.path / "cfg.json";
    {
        std::ofstream out(cfg);
        out << R"({"m2": 1.0, "t": "1", "grid_points": 64, "out_dir": ")"
            << tmp.path.string() << R"("})";
    }
    REQUIRE(run_cli("density --config " + cfg.string()) == 0);
    CHECK(fs::exists(tmp.path / "density_t1.csv"));
    // flag overrides the config's t
    REQUIRE(run_cli("density --config " + cfg.string() + " --t 2") == 0);
    CHECK(fs::exists(tmp.path / "density_t2.csv"));
}
