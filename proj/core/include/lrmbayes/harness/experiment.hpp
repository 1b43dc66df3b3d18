#pragma once

#include "lrmbayes/calibrate.hpp"
#include "lrmbayes/harness/config.hpp"
#include "lrmbayes/harness/report.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace lrmbayes::harness {

/// Posterior summary of one method on one dataset.
struct MethodSummary {
    std::string method;
    std::string label;              ///< dataset or setting, e.g. "grid=150 rep=3"
    std::vector<std::string> names; ///< parameter names
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    Eigen::MatrixXd cov;
    double beta = 1.0;
    std::string space = "eta"; ///< eta or theta
    std::string status = "ok"; ///< "ok" or the failure message
    bool ok() const { return status == "ok"; }
};

struct TimingRow {
    std::string method;
    std::size_t n = 0;
    double mean_seconds = 0.0;
    double sd_seconds = 0.0;
    std::size_t repeats = 0; ///< completed repeats
    bool timed_out = false;
};

struct Diagnostic {
    std::string method;
    std::string label;
    std::string name;
    double value = 0.0;
};

struct ResultBundle {
    ExperimentId experiment = ExperimentId::Cmp1d;
    std::vector<MethodSummary> summaries;
    std::vector<TimingRow> timing;
    std::vector<Diagnostic> diagnostics;
    std::vector<ManifestEntry> manifest;
    /// "method: message" for every failed method run.
    std::vector<std::string> failures;
    std::size_t method_runs = 0;

    bool all_failed() const { return method_runs > 0 && failures.size() == method_runs; }
    bool partial_failure() const { return !failures.empty() && !all_failed(); }
};

/// Validates the config, simulates or ingests data, fits every requested method and writes
/// CSV tables, SVG figures and manifest.json to config.output_dir. A failing method is
/// recorded in the bundle and the remaining methods still run.
ResultBundle run_experiment(const ExperimentConfig& config);

/// The dataset an experiment fits: data.path when set, otherwise the simulated stand-in
/// (same random streams as run_experiment). For ising this is the first grid's first replicate.
Dataset load_or_simulate(const ExperimentConfig& config);

/// Bootstrap calibration of the LRM beta on the experiment's dataset.
CalibrationResult calibrate_experiment(const ExperimentConfig& config);

/// `count` posterior-predictive samples under the LRM posterior (cmp1d, cmp1d-sensitivity,
/// robust-cmp, timing and cmp-graphical).
Dataset posterior_predictive(const ExperimentConfig& config, std::size_t count);

/// Per (method, n) wall-clock mean and SD over config.timing.repeats runs on CMP data.
/// LRM timings include beta calibration when beta_mode is calibrate. A repeat that runs
/// past the timeout marks the cell timed out and skips the method at larger n.
std::vector<TimingRow> benchmark_timing(const ExperimentConfig& config);

/// Columns method, n, mean_seconds, sd_seconds, repeats, timed_out.
std::string timing_csv(const std::vector<TimingRow>& rows);

/// Long-format summary: method, label, space, parameter, mean, sd, beta, status.
std::string summary_csv(const std::vector<MethodSummary>& rows);

/// 95% ellipse of the first two parameters of each summary (p >= 2 and status ok).
std::string ellipse_csv(const std::vector<MethodSummary>& rows);

/// Coverage curve of a calibration run as an SVG panel.
SvgPlot coverage_plot(const CalibrationResult& cal, const std::string& title);

} // namespace lrmbayes::harness
