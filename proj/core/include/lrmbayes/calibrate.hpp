#pragma once

#include "lrmbayes/domain.hpp"
#include "lrmbayes/lrm.hpp"
#include "lrmbayes/models.hpp"
#include "lrmbayes/pmf.hpp"
#include "lrmbayes/rng.hpp"

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lrmbayes {

struct CalibrationConfig {
    std::size_t bootstrap = 50;
    double delta = 0.05;
    double beta_min = 1e-3;
    double beta_max = 1e3;
    std::size_t grid_points = 25;
    /// Bisection stops once beta_hi / beta_lo < 1 + tolerance.
    double bisection_tolerance = 1e-3;
    std::size_t max_bisection = 60;
    /// Refit the PMF estimate on every bootstrap resample.
    bool refit_pmf = true;
    unsigned threads = 1;
    RngSpec rng;

    /// Throws ConfigError unless B >= 2, 0 < delta < 1 and 0 < beta_min < beta_max.
    void validate() const;
};

struct CoveragePoint {
    double beta = 0.0;
    double coverage = 0.0;
};

struct CalibrationResult {
    double beta = 0.0;
    double coverage = 0.0;
    double target_coverage = 0.95;
    std::vector<CoveragePoint> curve; ///< grid then bisection evaluations, sorted by beta
    Eigen::VectorXd theta_hat;        ///< full-data minimiser in eta-space
    bool bracket_found = false;
    std::string flag; ///< empty, "bracket not found: ..." or "degenerate: ..."
    std::size_t bootstrap = 0;
    std::size_t skipped = 0; ///< resamples dropped because their loss was singular or degenerate

    /// Columns beta, coverage.
    void write_csv(std::ostream& os) const;
    std::string to_json() const;
};

/// Builds the empirical quadratic loss of the resample given by unit indices (repeats allowed).
using LossBuilder = std::function<QuadraticLoss(std::span<const std::size_t> units)>;

/// What the bootstrap resamples: `units` exchangeable items and a loss per resample.
struct CalibrationProblem {
    std::size_t units = 0;
    LossBuilder build;
    GaussianPrior prior;
};

/// Bootstrap fits computed once and shared across beta values (common random numbers).
class CoverageEvaluator {
public:
    CoverageEvaluator(const CalibrationProblem& problem, const CalibrationConfig& cfg);

    /// Fraction of usable resamples whose ellipsoid contains theta_hat; 0 when none is usable.
    double coverage(double beta) const;

    bool degenerate() const { return degenerate_; }
    const std::string& degenerate_reason() const { return reason_; }
    const Eigen::VectorXd& theta_hat() const { return theta_hat_; }
    std::size_t usable() const { return losses_.size(); }
    std::size_t skipped() const { return skipped_; }

private:
    GaussianPrior prior_;
    Eigen::MatrixXd prior_precision_;
    Eigen::VectorXd prior_shift_;
    std::vector<QuadraticLoss> losses_;
    Eigen::VectorXd theta_hat_;
    double chi2_ = 0.0;
    std::size_t skipped_ = 0;
    bool degenerate_ = false;
    std::string reason_;
};

double coverage_at_beta(double beta, const CalibrationProblem& problem, const CalibrationConfig& cfg);

/// Log-grid scan then bisection between the bracketing pair. Returns the largest beta
/// found whose coverage is at least 1 - delta.
CalibrationResult calibrate_beta(const CalibrationProblem& problem, const CalibrationConfig& cfg);

/// How the PMF estimate is formed from a set of observations.
struct PmfRecipe {
    double alpha = 0.0;
    double epsilon = 0.01;
    /// Uniform base over this finite domain; otherwise the count mixture fitted to the data.
    std::optional<DomainSpec> finite_domain;

    SmoothedPmf fit(std::span<const StatePoint> samples) const;
};

/// Exponential-family LRM problem over i.i.d. samples; unit i is sample i.
/// The weight function, if `poisson_weighted`, is refit from each resample.
CalibrationProblem lrm_problem(const ExpFamilyModel& model, std::span<const StatePoint> samples,
                               const MatchingSet& matching, const PmfRecipe& recipe, const GaussianPrior& prior,
                               bool refit_pmf = true, bool poisson_weighted = false, AssemblyOptions assembly = {});

/// MRF local-conditional problem; units are the site occurrences of every lattice.
CalibrationProblem mrf_problem(const MrfModel& model, std::span<const StatePoint> lattices, double alpha,
                               MrfLossOptions loss_opts, const GaussianPrior& prior, bool refit_pmf = true);

} // namespace lrmbayes
