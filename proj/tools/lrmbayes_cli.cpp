// lrmbayes command-line front end.

#include "lrmbayes/error.hpp"
#include "lrmbayes/harness/config.hpp"
#include "lrmbayes/harness/dataset.hpp"
#include "lrmbayes/harness/experiment.hpp"
#include "lrmbayes/harness/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lh = lrmbayes::harness;

namespace {

enum Exit : int { Ok = 0, ConfigFailure = 2, NumericalFailure = 3, PartialFailure = 4 };

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
    bool overwrite = false;
};

struct Common {
    std::string experiment;
    std::string data;
    std::vector<std::string> methods;
};

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw lrmbayes::ConfigError("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

lh::ExperimentConfig resolve(const Globals& g, const Common& c, const char* fallback = nullptr)
{
    lh::ExperimentConfig cfg;
    if (!g.config.empty()) {
        cfg = lh::ExperimentConfig::from_json(slurp(g.config));
        if (!c.experiment.empty() && lh::experiment_from_string(c.experiment) != cfg.experiment)
            throw lrmbayes::ConfigError("--experiment " + c.experiment + " contradicts the config file (" +
                                        lh::to_string(cfg.experiment) + ")");
    } else if (!c.experiment.empty()) {
        cfg = lh::ExperimentConfig::defaults(lh::experiment_from_string(c.experiment));
    } else if (fallback) {
        cfg = lh::ExperimentConfig::defaults(lh::experiment_from_string(fallback));
    } else {
        throw lrmbayes::ConfigError("pass --config <path> or --experiment <id>");
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    if (!g.out.empty()) cfg.output_dir = g.out;
    if (g.overwrite) cfg.overwrite = true;
    if (!c.data.empty()) cfg.data.path = c.data;
    if (!c.methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : c.methods) cfg.methods.push_back(lh::method_from_string(m));
    }
    cfg.validate();
    return cfg;
}

std::string run_json(const lh::ExperimentConfig& cfg, const std::string& command)
{
    return "{\"command\":\"" + command + "\",\"experiment\":\"" + lh::to_string(cfg.experiment) +
           "\",\"seed\":" + std::to_string(cfg.seed) + "}";
}

void report_files(const std::string& root, const std::vector<lh::ManifestEntry>& files)
{
    std::cout << "wrote " << files.size() + 1 << " files to " << root << "\n";
    for (const auto& f : files) std::cout << "  " << f.path << " (" << f.bytes << " bytes)\n";
    std::cout << "  manifest.json\n";
}

int finish(const lh::ResultBundle& b, const lh::ExperimentConfig& cfg)
{
    report_files(cfg.output_dir, b.manifest);
    for (const auto& f : b.failures) std::cerr << "failed: " << f << "\n";
    if (b.all_failed()) return NumericalFailure;
    if (b.partial_failure()) return PartialFailure;
    return Ok;
}

int cmd_simulate(const Globals& g, const Common& c)
{
    auto cfg = resolve(g, c);
    cfg.data.path.reset();
    const auto data = lh::load_or_simulate(cfg);
    std::cerr << lh::to_string(data.kind) << ": " << data.summary.describe() << "\n";
    lh::OutputDir out(cfg.output_dir, cfg.overwrite);
    out.write("data.csv", lh::dataset_csv(data));
    out.write("config.json", cfg.to_json() + "\n");
    out.write_manifest(run_json(cfg, "simulate"));
    report_files(cfg.output_dir, out.entries());
    return Ok;
}

int cmd_calibrate(const Globals& g, const Common& c)
{
    const auto cfg = resolve(g, c);
    const auto cal = lh::calibrate_experiment(cfg);
    lh::OutputDir out(cfg.output_dir, cfg.overwrite);
    std::ostringstream csv;
    cal.write_csv(csv);
    out.write("calibration.csv", csv.str());
    out.write("calibration.svg", lh::render_svg({lh::coverage_plot(cal, "bootstrap coverage")}, 1));
    out.write("calibration.json", cal.to_json() + "\n");
    out.write_manifest(run_json(cfg, "calibrate"));
    std::cout << "beta = " << lh::format_double(cal.beta) << " (coverage " << lh::format_double(cal.coverage) << ")\n";
    if (!cal.flag.empty()) std::cerr << "warning: " << cal.flag << "\n";
    report_files(cfg.output_dir, out.entries());
    return Ok;
}

int cmd_predict(const Globals& g, const Common& c, std::size_t count)
{
    const auto cfg = resolve(g, c);
    const auto pred = lh::posterior_predictive(cfg, count);
    std::cerr << "predictive: " << pred.summary.describe() << "\n";
    lh::OutputDir out(cfg.output_dir, cfg.overwrite);
    out.write("predictive.csv", lh::dataset_csv(pred));
    out.write_manifest(run_json(cfg, "predict"));
    report_files(cfg.output_dir, out.entries());
    return Ok;
}

int cmd_benchmark(const Globals& g, const Common& c, const std::vector<std::size_t>& ns,
                  std::optional<std::size_t> repeats, std::optional<double> timeout)
{
    Common cc = c;
    if (cc.experiment.empty() && g.config.empty()) cc.experiment = "timing";
    auto cfg = resolve(g, cc);
    if (cfg.experiment != lh::ExperimentId::Timing)
        throw lrmbayes::ConfigError("benchmark runs the timing experiment, not " + lh::to_string(cfg.experiment));
    if (!ns.empty()) cfg.timing.n_sweep = ns;
    if (repeats) cfg.timing.repeats = *repeats;
    if (timeout) cfg.timing.timeout_seconds = *timeout;
    return finish(lh::run_experiment(cfg), cfg);
}

int cmd_experiment(const Globals& g, const Common& c)
{
    const auto cfg = resolve(g, c);
    std::cerr << "running " << lh::to_string(cfg.experiment) << " into " << cfg.output_dir << "\n";
    return finish(lh::run_experiment(cfg), cfg);
}

int cmd_diagnostics(const Globals& g, std::string dir, bool schema)
{
    if (schema) {
        std::cout << lh::config_schema() << "\n";
        return Ok;
    }
    if (dir.empty()) dir = g.out;
    if (dir.empty()) throw lrmbayes::ConfigError("pass --run <dir> or --out <dir>");
    const auto check = lh::verify_manifest(dir);
    std::cout << "manifest lists " << check.listed << " files\n";
    for (const auto& f : check.missing) std::cout << "  missing: " << f << "\n";
    for (const auto& f : check.mismatched) std::cout << "  hash mismatch: " << f << "\n";
    for (const auto& f : check.unlisted) std::cout << "  not in manifest: " << f << "\n";

    std::ifstream in(std::filesystem::path(dir) / "diagnostics.csv", std::ios::binary);
    if (in) {
        std::ostringstream buf;
        buf << in.rdbuf();
        const auto table = lh::parse_csv(buf.str());
        std::size_t flagged = 0;
        for (std::size_t r = 1; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            if (row.size() != 4) continue;
            const double v = std::strtod(row[3].c_str(), nullptr);
            const bool bad = (row[2].rfind("rhat_", 0) == 0 && !(v < 1.1)) ||
                             (row[2] == "bracket_found" && v == 0.0) ||
                             (row[2].rfind("acceptance_", 0) == 0 && (v < 0.05 || v > 0.9));
            if (bad) {
                ++flagged;
                std::cout << "  check " << row[0] << (row[1].empty() ? "" : " [" + row[1] + "]") << " " << row[2]
                          << " = " << row[3] << "\n";
            }
        }
        std::cout << table.rows.size() - (table.rows.empty() ? 0 : 1) << " diagnostics, " << flagged << " flagged\n";
    }
    return check.ok() ? Ok : ConfigFailure;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Discrete generalised Bayesian inference with the LRM loss"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "master seed (u64)");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", g.out, "output directory");
    app.add_flag("--overwrite", g.overwrite, "replace the files of an earlier run in --out");

    Common c;
    auto common = [&c](CLI::App* s, bool with_methods) {
        s->add_option("--experiment", c.experiment,
                      "cmp1d, cmp1d-sensitivity, cmp-graphical, ingarch, ising, potts, robust-cmp or timing");
        s->add_option("--data", c.data, "CSV dataset replacing the synthetic stand-in")->check(CLI::ExistingFile);
        if (with_methods) s->add_option("--method", c.methods, "lrm, dfd, pl, trunc-bayes or exchange (repeatable)");
    };

    auto* simulate = app.add_subcommand("simulate", "write the experiment's simulated dataset");
    simulate->add_option("--experiment", c.experiment, "experiment id");

    auto* fit = app.add_subcommand("fit", "fit the chosen methods to a dataset");
    common(fit, true);

    auto* calibrate = app.add_subcommand("calibrate", "bootstrap calibration of the LRM beta");
    common(calibrate, false);

    std::size_t count = 1000;
    auto* predict = app.add_subcommand("predict", "posterior-predictive samples under the LRM posterior");
    common(predict, false);
    predict->add_option("--count", count, "number of samples")->check(CLI::PositiveNumber);

    std::vector<std::size_t> ns;
    std::optional<std::size_t> repeats;
    std::optional<double> timeout;
    auto* bench = app.add_subcommand("benchmark", "wall-clock timing study on CMP data");
    common(bench, true);
    bench->add_option("--n", ns, "sample sizes (repeatable)");
    bench->add_option("--repeats", repeats, "repeats per cell");
    bench->add_option("--timeout", timeout, "seconds per repeat before a cell is marked timed out");

    auto* experiment = app.add_subcommand("experiment", "run a full experiment recipe");
    common(experiment, true);

    std::string run_dir;
    bool schema = false;
    auto* diagnostics = app.add_subcommand("diagnostics", "check a run directory, or print the config schema");
    diagnostics->add_option("--run", run_dir, "output directory of an earlier run");
    diagnostics->add_flag("--schema", schema, "print the JSON schema of the config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : ConfigFailure;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(g, c);
        if (fit->parsed()) {
            if (!g.config.empty() || !c.experiment.empty()) return cmd_experiment(g, c);
            throw lrmbayes::ConfigError("fit needs --config or --experiment");
        }
        if (calibrate->parsed()) return cmd_calibrate(g, c);
        if (predict->parsed()) return cmd_predict(g, c, count);
        if (bench->parsed()) return cmd_benchmark(g, c, ns, repeats, timeout);
        if (experiment->parsed()) return cmd_experiment(g, c);
        if (diagnostics->parsed()) return cmd_diagnostics(g, run_dir, schema);
    } catch (const lrmbayes::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ConfigFailure;
    } catch (const lrmbayes::StructuralError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ConfigFailure;
    } catch (const lrmbayes::InvariantError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ConfigFailure;
    } catch (const lrmbayes::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return NumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return NumericalFailure;
    }
    return Ok;
}
