#pragma once

#include "lrmbayes/domain.hpp"
#include "lrmbayes/models.hpp"
#include "lrmbayes/pmf.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace lrmbayes {

/// L(eta) = eta^T Lambda eta - 2 eta^T nu + c, the empirical LRM loss of an exponential family.
/// The squared PMF log-ratios do not depend on eta and are left out of c.
struct QuadraticLoss {
    Eigen::MatrixXd Lambda;
    Eigen::VectorXd nu;
    double c = 0.0;
    std::size_t n = 0;       ///< sample count entering 2 beta n
    std::size_t terms = 0;   ///< (x, x') pairs that contributed
    std::size_t omitted = 0; ///< pairs dropped because a log-ratio was undefined

    std::size_t p() const { return static_cast<std::size_t>(nu.size()); }
    double evaluate(const Eigen::VectorXd& eta) const;

    static QuadraticLoss zero(std::size_t p, std::size_t n = 0);
};

struct GaussianPrior {
    Eigen::VectorXd mu;
    Eigen::MatrixXd Sigma;

    static GaussianPrior isotropic(const Eigen::VectorXd& mean, double variance);
    /// Throws ConfigError unless Sigma is symmetric positive definite and sizes match.
    void validate() const;
};

struct GaussianPosterior {
    Eigen::VectorXd mu;
    Eigen::MatrixXd Sigma;
    /// Optional sign constraints on eta; empty means unconstrained.
    std::vector<SignConstraint> constraints;

    std::size_t p() const { return static_cast<std::size_t>(mu.size()); }
    bool constrained() const;
    /// Marginal standard deviations.
    Eigen::VectorXd sd() const;
};

class WeightFunction {
public:
    enum class Kind { Constant, PoissonMarginals };

    static WeightFunction constant() { return WeightFunction{}; }
    static WeightFunction poisson_marginals(std::vector<double> means);

    Kind kind() const { return kind_; }
    const std::vector<double>& means() const { return means_; }
    /// True when some mean is zero, so w vanishes wherever that coordinate is positive.
    bool degenerate() const { return degenerate_; }

    double log_weight(const StatePoint& x) const;
    double operator()(const StatePoint& x) const;

private:
    Kind kind_ = Kind::Constant;
    std::vector<double> means_;
    bool degenerate_ = false;
};

/// Product of Poisson marginals centred at the per-coordinate sample medians.
WeightFunction poisson_weights(std::span<const StatePoint> samples);

/// Per-observation model selection: either one model for every sample or one model per sample
/// (the INGARCH conditional models differ across time).
class ModelView {
public:
    ModelView(const ExpFamilyModel& shared) : shared_(&shared) {} // NOLINT(google-explicit-constructor)
    explicit ModelView(std::span<const ExpFamilyModel* const> per_sample) : per_(per_sample) {}

    const ExpFamilyModel& at(std::size_t i) const { return shared_ ? *shared_ : *per_[i]; }
    std::size_t dimension() const { return shared_ ? shared_->dimension() : per_.front()->dimension(); }
    bool per_sample() const { return shared_ == nullptr; }
    std::size_t size() const { return per_.size(); }

private:
    const ExpFamilyModel* shared_ = nullptr;
    std::span<const ExpFamilyModel* const> per_;
};

/// Exact divergence between two PMF tables indexed by DomainSpec::index_of.
double lrm_divergence_exact(std::span<const double> q, std::span<const double> p, const DomainSpec& domain,
                            const MatchingSet& matching);

/// Direct evaluation of the (optionally weighted) empirical loss at theta.
double lrm_loss_direct(const ModelView& model, const Eigen::VectorXd& theta, std::span<const StatePoint> samples,
                       const MatchingSet& matching, const SmoothedPmf& qhat,
                       const WeightFunction& w = WeightFunction::constant());

struct AssemblyOptions {
    unsigned threads = 1;
    std::size_t chunk = 512; ///< fixed chunking keeps the reduction order independent of the thread count
};

/// Lambda, nu and c of the empirical loss. Pairs with an undefined log-ratio are dropped from all three.
QuadraticLoss build_quadratic(const ModelView& model, std::span<const StatePoint> samples,
                              const MatchingSet& matching, const SmoothedPmf& qhat,
                              const WeightFunction& w = WeightFunction::constant(), AssemblyOptions opts = {});

/// Sigma_n = (Sigma^-1 + 2 beta n Lambda)^-1, mu_n = Sigma_n (Sigma^-1 mu + 2 beta n nu).
/// The constraints are attached to the result for downstream truncated sampling.
GaussianPosterior conjugate_update(const GaussianPrior& prior, const QuadraticLoss& loss, double beta,
                                   std::vector<SignConstraint> constraints = {});

/// Solves Lambda eta = nu. Throws NumericalError when Lambda is singular.
Eigen::VectorXd min_lrm_estimate(const QuadraticLoss& loss);

/// Local-conditional loss of a Markov random field. Each site occurrence contributes
/// (1/|S|) sum over s != x_k of the squared-ratio terms against q(s | nb) / q(x_k | nb).
/// Terms whose candidate conditional falls below the given quantile of all candidate
/// conditionals are dropped. n is the number of site occurrences.
struct MrfLossOptions {
    double truncation_quantile = 0.0;
};
QuadraticLoss mrf_local_loss(const MrfModel& model, const LocalConditionalTable& table,
                             std::span<const StatePoint> lattices, MrfLossOptions opts = {});
/// Same, restricted to the listed (lattice, site) units.
QuadraticLoss mrf_local_loss(const MrfModel& model, const LocalConditionalTable& table,
                             std::span<const StatePoint> lattices, std::span<const SiteRef> units,
                             MrfLossOptions opts = {});

/// JSON with fields Lambda, nu, c, n, p (loss) and mu, Sigma, p, constraints (posterior).
std::string to_json(const QuadraticLoss& loss);
std::string to_json(const GaussianPosterior& post);
QuadraticLoss quadratic_loss_from_json(const std::string& text);
GaussianPosterior gaussian_posterior_from_json(const std::string& text);

} // namespace lrmbayes
