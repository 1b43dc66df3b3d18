#pragma once

#include "lrmbayes/harness/dataset.hpp"
#include "lrmbayes/lrm.hpp"
#include "lrmbayes/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lrmbayes::harness {

enum class ExperimentId { Cmp1d, Cmp1dSensitivity, CmpGraphical, Ingarch, Ising, Potts, RobustCmp, Timing };
enum class Method { Lrm, Dfd, Pl, TruncBayes, Exchange };
enum class BetaMode { Fixed, Calibrate };

std::string to_string(ExperimentId id);
std::string to_string(Method m);
std::string to_string(BetaMode m);
ExperimentId experiment_from_string(const std::string& s);
Method method_from_string(const std::string& s);
BetaMode beta_mode_from_string(const std::string& s);

/// Methods a given experiment can run.
std::vector<Method> valid_methods(ExperimentId id);

struct ModelSettings {
    std::vector<double> theta;  ///< truth used to simulate data
    double ar_phi = 0.3;        ///< ingarch
    std::size_t dimension = 10; ///< cmp-graphical variables
    std::int64_t states = 4;    ///< potts
};

struct DataSettings {
    std::size_t n = 2000;                     ///< samples or series length
    std::size_t grid = 150;                   ///< lattice side (potts synthetic raster, single-grid ising)
    std::vector<std::size_t> grids;           ///< ising sweep
    std::size_t repetitions = 20;             ///< ising simulations per grid
    std::size_t sweeps = 200;                 ///< Gibbs sweeps per simulated lattice
    std::optional<std::string> path;          ///< external dataset; synthetic stand-in when absent
    double contamination = 0.05;              ///< robust-cmp outlier fraction
    double contamination_mean = 20.0;         ///< robust-cmp outlier Poisson mean
};

struct LrmSettings {
    double alpha = 0.0;
    double epsilon = 0.01;
    std::vector<std::int64_t> offsets{1};
    BetaMode beta_mode = BetaMode::Calibrate;
    double beta = 1.0;
    std::size_t bootstrap = 50;
    double delta = 0.05;
    double truncation_quantile = 0.0;
    /// cmp1d-sensitivity sweeps
    std::vector<double> alphas;
    std::vector<std::vector<std::int64_t>> offset_sets;
};

struct PriorSettings {
    std::vector<double> mean;
    std::vector<std::vector<double>> cov;
};

struct McmcSettings {
    std::size_t draws = 5000;
    std::size_t burn_in = 5000;
    std::size_t chains = 1;
    std::size_t inner_sweeps = 30;  ///< exchange
    double proposal_scale = 0.0;    ///< 0 picks a scale from the Laplace fit
    double phi_prior_mean = 0.0;
    double phi_prior_sd = 0.01;
    double phi_scale = 0.01;
    std::size_t phi_updates = 10;
    std::size_t predictive_draws = 100; ///< cmp-graphical parameter draws for the predictive
};

struct TimingSettings {
    std::vector<std::size_t> n_sweep{250, 500, 1000, 2000};
    std::size_t repeats = 10;
    double timeout_seconds = 600.0;
};

/// One experiment. A config that only names the experiment gets the experiment's default recipe.
struct ExperimentConfig {
    ExperimentId experiment = ExperimentId::Cmp1d;
    std::vector<Method> methods;
    ModelSettings model;
    DataSettings data;
    LrmSettings lrm;
    PriorSettings prior;
    McmcSettings mcmc;
    TimingSettings timing;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string output_dir = "out";
    bool overwrite = false;

    static ExperimentConfig defaults(ExperimentId id);
    /// Unknown keys are rejected; missing keys take the experiment's defaults.
    static ExperimentConfig from_json(const std::string& text);
    std::string to_json() const;

    /// Natural-parameter dimension of the fitted model.
    std::size_t parameter_dimension() const;
    GaussianPrior gaussian_prior() const;
    RngSpec rng(std::uint64_t stream) const { return {.seed = seed, .stream = stream}; }

    /// Throws ConfigError describing the first problem found.
    void validate() const;
};

/// The JSON schema of the config file.
std::string config_schema();

} // namespace lrmbayes::harness
