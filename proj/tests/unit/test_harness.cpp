#include "lrmbayes/error.hpp"
#include "lrmbayes/harness/experiment.hpp"

#include <Eigen/LU>
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lrmbayes;
using namespace lrmbayes::harness;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("lrmbayes_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig tiny_cmp(const fs::path& out)
{
    auto c = ExperimentConfig::defaults(ExperimentId::Cmp1d);
    c.methods = {Method::Lrm, Method::Dfd};
    c.data.n = 300;
    c.lrm.bootstrap = 10;
    c.mcmc.draws = 300;
    c.mcmc.burn_in = 200;
    c.seed = 5;
    c.output_dir = out.string();
    return c;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("CSV writer output parses back, with RFC-4180 quoting")
{
    CsvWriter w({"name", "value"});
    w.cell(std::string_view("a,b")).cell(1.5).end_row();
    w.cell(std::string_view("say \"hi\"\nnext")).cell(std::int64_t{-3}).end_row();
    const auto& text = w.text();
    CHECK(text.rfind("name,value\r\n", 0) == 0);
    CHECK(text.find("\"say \"\"hi\"\"\nnext\"") != std::string::npos);
    const auto t = parse_csv(text);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[1][0] == "a,b");
    CHECK(t.rows[2][0] == "say \"hi\"\nnext");
    CHECK(t.rows[2][1] == "-3");
    CHECK(t.lines[2] == 3);
    CHECK_THROWS_AS(parse_csv("a,b\r\n\"open,1\r\n"), ConfigError);
}

TEST_CASE("format_double round-trips")
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0})
        CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("dataset parsing and schema errors")
{
    const auto d = parse_dataset("a,b\n1,2\n3,4\n", DatasetKind::CountMatrix);
    CHECK(d.samples.size() == 2);
    CHECK(d.summary.max == 4);
    CHECK(parse_dataset("1,2\n3.0,4\n", DatasetKind::CountMatrix).samples[1][0] == 3);
    try {
        parse_dataset("1,2\n3,-4\n", DatasetKind::CountMatrix);
        FAIL("negative count accepted");
    } catch (const SchemaError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 2);
    }
    try {
        parse_dataset("1,2\n3,4,5\n", DatasetKind::CountMatrix);
        FAIL("ragged row accepted");
    } catch (const SchemaError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_dataset("1,2\n3,x\n", DatasetKind::CountMatrix), SchemaError);
    const auto r = parse_dataset("0,1,2\n2,1,0\n", DatasetKind::LatticeRaster);
    CHECK(r.geometry.rows == 2);
    CHECK(r.geometry.cols == 3);
    CHECK(r.states == 3);
    const auto back = parse_dataset(dataset_csv(r), DatasetKind::LatticeRaster);
    CHECK(back.samples == r.samples);
}

TEST_CASE("config defaults, unknown keys and bad values")
{
    for (auto id : {ExperimentId::Cmp1d, ExperimentId::Cmp1dSensitivity, ExperimentId::CmpGraphical,
                    ExperimentId::Ingarch, ExperimentId::Ising, ExperimentId::Potts, ExperimentId::RobustCmp,
                    ExperimentId::Timing}) {
        const auto c = ExperimentConfig::defaults(id);
        CHECK_NOTHROW(c.validate());
        const auto again = ExperimentConfig::from_json(c.to_json());
        CHECK(again.to_json() == c.to_json());
    }
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"experiment":"cmp1d","bogus":1})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"experiment":"cmp1d","methods":["pl"]})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"experiment":"timing","timing":{"repeats":0}})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"experiment":"nope"})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json("{"), ConfigError);
    const auto s = config_schema();
    CHECK(s.find("\"$schema\"") != std::string::npos);
}

TEST_CASE("ellipse parameters of a known covariance")
{
    const double level = 5.991464547107979;
    const auto e = ellipse_params({1.0, -2.0}, Eigen::Vector2d(4.0, 1.0).asDiagonal().toDenseMatrix(), level);
    CHECK(e.semi_major == doctest::Approx(2.0 * std::sqrt(level)));
    CHECK(e.semi_minor == doctest::Approx(std::sqrt(level)));
    CHECK(std::abs(std::sin(e.angle)) < 1e-12);

    // rotate diag(9, 1) by 30 degrees
    const double a = M_PI / 6.0;
    Eigen::Matrix2d R;
    R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    const Eigen::Matrix2d S = R * Eigen::Vector2d(9.0, 1.0).asDiagonal() * R.transpose();
    const auto f = ellipse_params({0.0, 0.0}, S, 1.0);
    CHECK(f.semi_major == doctest::Approx(3.0));
    CHECK(f.semi_minor == doctest::Approx(1.0));
    CHECK(std::abs(std::sin(f.angle - a)) < 1e-10);
    for (const auto& z : ellipse_outline(f, 32))
        CHECK(z.dot(S.inverse() * z) == doctest::Approx(1.0));
}

TEST_CASE("output directory refuses foreign files")
{
    const auto dir = fresh_dir("outdir");
    {
        OutputDir out(dir);
        out.write("a.csv", "x\r\n1\r\n");
        out.write_manifest();
    }
    const auto open = [&](bool overwrite) { OutputDir o(dir, overwrite); };
    CHECK_THROWS_AS(open(false), ConfigError);
    CHECK_NOTHROW(open(true));
    std::ofstream(dir / "stray.txt") << "hi";
    CHECK_THROWS_AS(open(true), ConfigError);
    CHECK(fs::exists(dir / "stray.txt"));
    fs::remove_all(dir);
}

TEST_CASE("experiment runs are deterministic and fully listed in the manifest")
{
    const auto d1 = fresh_dir("run1"), d2 = fresh_dir("run2");
    const auto b1 = run_experiment(tiny_cmp(d1));
    auto c2 = tiny_cmp(d2);
    c2.threads = 2;
    run_experiment(c2);
    CHECK(b1.failures.empty());
    CHECK(b1.method_runs == 2);
    for (const char* f : {"summary.csv", "ellipses.csv", "diagnostics.csv", "data.csv", "chains_dfd.csv"})
        CHECK_MESSAGE(slurp(d1 / f) == slurp(d2 / f), f);

    const auto check = verify_manifest(d1);
    CHECK(check.ok());
    CHECK(check.listed == b1.manifest.size());
    CHECK(unlisted_files(d1).empty());
    std::ofstream(d1 / "extra.csv") << "x\r\n";
    CHECK(verify_manifest(d1).unlisted == std::vector<std::string>{"extra.csv"});
    std::ofstream(d1 / "summary.csv", std::ios::app) << "tampered\r\n";
    CHECK(verify_manifest(d1).mismatched == std::vector<std::string>{"summary.csv"});

    // figure annotations carry the same centres as the summary table
    const auto svg = slurp(d2 / "ellipses.svg");
    for (const auto& s : b1.summaries) {
        const std::string want = "<title>" + s.method + ": centre (" + format_double(s.mean(0)) + ", " +
                                 format_double(s.mean(1)) + ")</title>";
        CHECK_MESSAGE(svg.find(want) != std::string::npos, want);
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("an infeasible sensitivity variant is a partial failure")
{
    const auto dir = fresh_dir("sens");
    auto c = ExperimentConfig::defaults(ExperimentId::Cmp1dSensitivity);
    c.data.n = 300;
    c.lrm.bootstrap = 10;
    c.lrm.alphas = {0.0};
    c.lrm.offset_sets = {{1}, {-1}};
    c.output_dir = dir.string();
    const auto b = run_experiment(c);
    CHECK(b.partial_failure());
    REQUIRE(b.failures.size() == 1);
    CHECK(b.failures[0].find("empty") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("timing needs at least one repeat")
{
    auto c = ExperimentConfig::defaults(ExperimentId::Timing);
    c.timing.repeats = 0;
    CHECK_THROWS_AS(benchmark_timing(c), ConfigError);
}

} // TEST_SUITE
