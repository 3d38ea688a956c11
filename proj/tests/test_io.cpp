#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glideopt/errors.hpp"
#include "glideopt/io.hpp"

using namespace glideopt;
namespace fs = std::filesystem;

namespace {

// Published year-30 optimal glidepath used for the output-format check.
const std::vector<double> kScenario7 = {
    0.8235272966, 0.8617503896, 0.8850732670, 0.8931568162, 0.8890061069, 0.8765350143,
    0.8590020928, 0.8386754281, 0.8170174723, 0.7949412393, 0.7730074379, 0.7515547956,
    0.7307821069, 0.7107993614, 0.6916598009, 0.6733802825, 0.6559544071, 0.6393611079,
    0.6235703362, 0.6085468596, 0.5942528104, 0.5806493950, 0.5676980327, 0.5553611039,
    0.5436024264, 0.5323875470, 0.5216839028, 0.5114608960, 0.5016899088, 0.4923442815};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("glideopt_io_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("control file parsing, dp flavor") {
    std::istringstream in(
        "0.082509 0.0402696529 0.021409 0.0069605649 0.0007344180 0.000\n"
        "30 0.05 0.00000000001\n"
        "nr dp 5000 2.75\n");
    const ControlFile c = ControlFile::parse(in);
    CHECK(c.params.mu_s == 0.082509);
    CHECK(c.params.expense_ratio == 0.0);
    CHECK(c.horizon == 30);
    CHECK(c.withdrawal_rate == 0.05);
    CHECK(c.epsilon == 1e-11);
    CHECK(c.method == Method::Newton);
    CHECK(c.estimator == Estimator::Dp);
    CHECK(c.dp_precision == 5000);
    CHECK(c.dp_rf_max == 2.75);
}

TEST_CASE("control file parsing, sim flavor") {
    std::istringstream in(
        "0.055000 0.0428490000 0.017500 0.0042250000 0.0040365000 0.010\n"
        "30 0.04 0.00005\n"
        "ga sim 500000000 0.15 0.20\n");
    const ControlFile c = ControlFile::parse(in);
    CHECK(c.method == Method::GradientAscent);
    CHECK(c.estimator == Estimator::Simulation);
    CHECK(c.sim_n == 500000000LL);
    CHECK(c.sim_alpha1 == 0.15);
    CHECK(c.sim_alpha2 == 0.20);
    const OptimizerConfig cfg = c.optimizer_config();
    CHECK(cfg.alpha_noninferiority == 0.15);
    CHECK(cfg.alpha_zero == 0.20);
}

TEST_CASE("control file rejects malformed inputs") {
    std::istringstream bad_method(
        "0.08 0.04 0.02 0.007 0.0007 0.0\n30 0.04 1e-6\nxx dp 1000 2.75\n");
    CHECK_THROWS_AS(ControlFile::parse(bad_method), GlidepathError);
    std::istringstream truncated("0.08 0.04 0.02\n");
    CHECK_THROWS_AS(ControlFile::parse(truncated), GlidepathError);
}

TEST_CASE("control file write/parse round trip") {
    ControlFile c;
    c.params = ReturnParams::evensky(0.01);
    c.horizon = 12;
    c.withdrawal_rate = 0.045;
    c.epsilon = 1e-7;
    c.method = Method::GradientAscent;
    c.estimator = Estimator::Dp;
    c.dp_precision = 1234;
    c.dp_rf_max = 3.0;
    std::ostringstream out;
    c.write(out);
    std::istringstream in(out.str());
    const ControlFile back = ControlFile::parse(in);
    CHECK(back.horizon == c.horizon);
    CHECK(back.dp_precision == c.dp_precision);
    CHECK(back.params.cov_sb == doctest::Approx(c.params.cov_sb).epsilon(1e-12));
}

TEST_CASE("glidepath file length is enforced") {
    TempDir tmp;
    const auto path = (tmp.path / "gp.txt").string();
    {
        std::ofstream out(path);
        for (int i = 0; i < 29; ++i)
            out << "0.45\n";
    }
    CHECK_THROWS_WITH_AS((void)read_glidepath_file(path, 30),
                         doctest::Contains("needs 30 initial asset allocations"), GlidepathError);
    CHECK_THROWS_WITH_AS((void)read_glidepath_file((tmp.path / "missing.txt").string(), 5),
                         doctest::Contains("Could not read file"), GlidepathError);
    const Glidepath ok = read_glidepath_file(path, 29);
    CHECK(ok.horizon() == 29);
    CHECK(ok.ratios[0] == 0.45);
}

TEST_CASE("output block matches the published layout") {
    const std::string text = format_output(0.527952155270, Glidepath(kScenario7));
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line.empty()); // leading blank line
    std::getline(lines, line);
    CHECK(line == "--> Success probability for this Glide-Path = 0.527952155270");
    std::getline(lines, line);
    CHECK(line ==
          "GP[00]=+0.8235272966 GP[06]=+0.8590020928 GP[12]=+0.7307821069 GP[18]=+0.6235703362 "
          "GP[24]=+0.5436024264 ");
    std::getline(lines, line);
    CHECK(line ==
          "GP[01]=+0.8617503896 GP[07]=+0.8386754281 GP[13]=+0.7107993614 GP[19]=+0.6085468596 "
          "GP[25]=+0.5323875470 ");
    int rows = 2;
    while (std::getline(lines, line) && !line.empty())
        ++rows;
    CHECK(rows == 6); // ceil(30/5) rows, column-major

    // ratios print with 10 digits, probability with 12
    CHECK(text.find("+0.4923442815") != std::string::npos);

    // the gradient label path suppresses the out-of-range probability line
    const std::string grad_text = format_output(-1.0, Glidepath({0.1, 0.2}), "Grd");
    CHECK(grad_text.find("Success probability") == std::string::npos);
    CHECK(grad_text.find("Grd[00]") != std::string::npos);
}

TEST_CASE("output file round-trips through the glidepath reader") {
    TempDir tmp;
    const auto path = (tmp.path / "output.txt").string();
    write_output_file(path, 0.9196892347, Glidepath(kScenario7));
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first.empty());
    std::getline(in, first);
    CHECK(first == "--> Success probability for this Glide-Path = 0.919689234700");
}

TEST_CASE("csv export") {
    TempDir tmp;
    const auto path = (tmp.path / "gp.csv").string();
    std::vector<IterationRecord> iters(1);
    iters[0].iteration = 1;
    iters[0].probability = 0.9;
    iters[0].max_effective = 1e-3;
    write_csv(path, Glidepath({0.4, 0.5}), iters);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,alpha");
    std::getline(in, line);
    CHECK(line == "1,0.4");
}

TEST_CASE("scenario presets") {
    TempDir tmp;
    for (int s : {1, 4, 8}) {
        const auto dir = (tmp.path / ("scenario" + std::to_string(s))).string();
        write_scenario_preset(s, dir);
        const ControlFile c = ControlFile::load(dir + "/control.txt");
        CHECK(c.horizon == 30);
        if (s == 1) {
            CHECK(c.params.mu_s == doctest::Approx(0.082509));
            CHECK(c.withdrawal_rate == 0.04);
            CHECK(c.params.expense_ratio == 0.0);
            CHECK(c.method == Method::Newton);
        }
        if (s == 4) {
            CHECK(c.params.mu_s == doctest::Approx(0.055));
            CHECK(c.params.expense_ratio == doctest::Approx(0.01));
        }
        if (s == 8) {
            CHECK(c.method == Method::GradientAscent);
            CHECK(c.withdrawal_rate == 0.05);
        }
        const Glidepath gp = read_glidepath_file(dir + "/gp.txt", c.horizon);
        CHECK(gp.ratios[0] == 0.45);
    }
    CHECK_THROWS_AS(write_scenario_preset(9, (tmp.path / "bad").string()), GlidepathError);
}
