#pragma once

#include "lrmbayes/lrm.hpp"
#include "lrmbayes/models.hpp"
#include "lrmbayes/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lrmbayes {

// ---- data simulators

struct CmpRejectionOptions {
    /// Upper end of the range scanned for the envelope constant; extended to the
    /// point where the target-to-proposal ratio starts to fall.
    std::int64_t truncation = 100;
};

/// Exact CMP(theta1, theta2) draws by rejection. theta2 >= 1 uses a Poisson(theta1) proposal;
/// theta2 < 1 uses a geometric proposal because no Poisson envelope exists there.
class CmpRejectionSampler {
public:
    CmpRejectionSampler(double theta1, double theta2, CmpRejectionOptions opts = {});

    std::int64_t operator()(Rng& rng) const;
    /// log of the envelope constant used by the acceptance test.
    double log_envelope() const { return log_m_; }
    bool poisson_proposal() const { return poisson_; }

private:
    double log_target(std::int64_t x) const;
    double log_proposal(std::int64_t x) const;

    double theta1_, theta2_;
    bool poisson_;
    double geo_r_ = 0.0;
    double log_m_ = 0.0;
};

std::vector<std::int64_t> sample_cmp_rejection(double theta1, double theta2, std::size_t n, Rng& rng,
                                               CmpRejectionOptions opts = {});

struct GibbsResult {
    StatePoint lattice;
    std::vector<double> magnetisation; ///< one entry per sweep
};

/// Random-scan single-site Gibbs; one sweep is d site updates. Starts from `init` or a uniform draw.
GibbsResult gibbs_lattice(const MrfModel& model, const Eigen::VectorXd& theta, std::size_t sweeps, Rng& rng,
                          const StatePoint* init = nullptr);

/// In-place sweeps without a trace (used for auxiliary draws).
void gibbs_sweeps(const MrfModel& model, const Eigen::VectorXd& theta, StatePoint& lattice, std::size_t sweeps,
                  Rng& rng);

/// INGARCH-CMP series of length T simulated forward from lambda0.
std::vector<std::int64_t> simulate_ingarch(const Eigen::VectorXd& theta, double ar_phi, std::size_t length, Rng& rng,
                                           double lambda0 = 1.0, std::size_t warmup = 0);

// ---- chains and diagnostics

struct ChainSet {
    std::vector<std::string> names;
    std::vector<Eigen::MatrixXd> chains; ///< iterations x p, burn-in included
    std::vector<double> acceptance;
    std::size_t burn_in = 0;

    std::size_t p() const { return names.size(); }
    std::size_t chain_count() const { return chains.size(); }
    std::size_t iterations() const { return chains.empty() ? 0 : static_cast<std::size_t>(chains.front().rows()); }

    /// Post-burn-in draws of every chain stacked.
    Eigen::MatrixXd pooled() const;
    Eigen::VectorXd mean() const;
    Eigen::VectorXd sd() const;
    Eigen::MatrixXd covariance() const;

    /// Columns chain, iter, then one column per parameter.
    void write_csv(std::ostream& os) const;
};

struct GelmanRubinReport {
    std::vector<std::optional<double>> rhat; ///< nullopt where the within-chain variance is zero
    Eigen::VectorXd between;
    Eigen::VectorXd within;
    std::size_t chains = 0;
    std::size_t draws = 0;
    bool degenerate = false;
};

/// Classical potential scale reduction on post-burn-in draws. Needs >= 2 chains of >= 10 draws.
GelmanRubinReport gelman_rubin(const ChainSet& chains);

// ---- MCMC kernels

using LogTarget = std::function<double(const Eigen::VectorXd&)>;

struct RwmhOptions {
    std::size_t iterations = 5000;
    std::optional<std::size_t> burn_in; ///< default 25% of iterations
    std::size_t chains = 4;
    unsigned threads = 1;
    /// Chains after the first start at init + spread * scales * N(0, I).
    double init_spread = 0.0;
    std::vector<std::string> names;
};

/// Gaussian random-walk Metropolis-Hastings. -inf targets are rejected; NaN aborts.
ChainSet rwmh(const LogTarget& log_target, const Eigen::VectorXd& init, const Eigen::VectorXd& scales,
              const RwmhOptions& opts, const RngSpec& spec);

enum class IngarchPmfKind {
    Marginal, ///< one smoothed PMF over all x_t
    Lag1,     ///< q(x_t | x_{t-1}), shrunk toward the marginal with weight alpha
};

struct IngarchLrmOptions {
    std::vector<std::int64_t> offsets{-1, 1};
    double alpha = 1.0;
    double epsilon = 0.01;
    double lambda0 = 1.0;
    IngarchPmfKind pmf = IngarchPmfKind::Marginal;
};

/// Precomputed LRM terms of the INGARCH-CMP series. Observations t = 1..T-1 enter the loss;
/// per-term log-ratios are fixed so every ar_phi value costs one pass over the terms.
class IngarchLrm {
public:
    /// `units` lists the time steps that enter the loss (repeats allowed); empty means t = 1..T-1.
    IngarchLrm(std::span<const std::int64_t> series, IngarchLrmOptions opts = {},
               std::span<const std::size_t> units = {});

    std::size_t n() const { return units_; }
    const std::vector<std::int64_t>& series() const { return series_; }
    double lambda0() const { return lambda0_; }

    QuadraticLoss quadratic(double ar_phi) const;
    /// Exact loss at (theta, ar_phi).
    double loss(const Eigen::VectorXd& theta, double ar_phi) const;

private:
    struct Term {
        std::uint32_t t;
        double dx;
        double dlogfact;
        double lr;
        double f;
    };
    std::vector<std::int64_t> series_;
    std::vector<Term> terms_;
    std::size_t units_ = 0;
    double lambda0_ = 1.0;
};

struct IngarchMwgOptions {
    GaussianPrior prior;
    double beta = 1.0;
    double phi_prior_mean = 0.0;
    double phi_prior_sd = 0.01;
    double phi_scale = 0.01;
    std::size_t phi_updates = 10;
    double phi_init = 0.0;
    std::size_t iterations = 5000;
    std::size_t burn_in = 3000;
    std::size_t chains = 4;
    unsigned threads = 1;
};

/// theta | phi by an exact conjugate Gaussian draw, then phi | theta by random-walk updates.
ChainSet metropolis_within_gibbs_ingarch(const IngarchLrm& lrm, const IngarchMwgOptions& opts, const RngSpec& spec);

struct ExchangeOptions {
    std::size_t iterations = 2000;
    std::size_t burn_in = 500;
    std::size_t inner_sweeps = 30;
    /// Per-coordinate random-walk scale; empty means 0.1 x prior SD.
    Eigen::VectorXd proposal_scale;
    std::size_t chains = 1;
    unsigned threads = 1;
    std::optional<Eigen::VectorXd> init;
};

/// Exchange algorithm for an MRF with a Gaussian prior. The auxiliary lattice is an
/// approximate draw: inner_sweeps Gibbs sweeps at the proposed parameter, started from the data.
ChainSet exchange_mcmc_mrf(const MrfModel& model, const StatePoint& observed, const GaussianPrior& prior,
                           const ExchangeOptions& opts, const RngSpec& spec);

struct PredictiveOptions {
    std::size_t burn_in = 500;
    std::size_t thin = 10;
};

/// For each parameter row, runs a +-1 single-coordinate MH chain against the unnormalised model and
/// keeps `per_draw` thinned states.
std::vector<StatePoint> mh_posterior_predictive_cmp_graphical(const CmpGraphical& model,
                                                              const Eigen::MatrixXd& theta_draws,
                                                              std::size_t per_draw, const PredictiveOptions& opts,
                                                              Rng& rng);

// ---- Gaussian and truncated-Gaussian draws

/// One N(mean, sd^2) draw restricted to (lo, hi); either bound may be infinite.
double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng);

struct TruncatedGibbsOptions {
    std::size_t burn_in = 200;
    std::size_t thin = 2;
};

/// Rows are eta draws. Unconstrained posteriors are sampled exactly; constrained ones by
/// coordinate-wise Gibbs over univariate truncated normals.
Eigen::MatrixXd sample_eta_posterior(const GaussianPosterior& post, std::size_t n, Rng& rng,
                                     TruncatedGibbsOptions opts = {});

} // namespace lrmbayes
