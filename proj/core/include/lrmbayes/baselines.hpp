#pragma once

#include "lrmbayes/domain.hpp"
#include "lrmbayes/lrm.hpp"
#include "lrmbayes/models.hpp"
#include "lrmbayes/pmf.hpp"
#include "lrmbayes/rng.hpp"
#include "lrmbayes/samplers.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lrmbayes {

/// A smooth empirical loss written as a function of the natural parameter eta.
/// Baseline posteriors are run in eta-space so they share the LRM prior.
class EtaLoss {
public:
    virtual ~EtaLoss() = default;

    virtual std::size_t dimension() const = 0;
    /// Number of units averaged over; enters the posterior as beta n.
    virtual std::size_t n() const = 0;
    /// +infinity on overflow or outside the model's domain.
    virtual double value(const Eigen::VectorXd& eta) const = 0;
    virtual void derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const = 0;
};

/// Discrete Fisher divergence loss of an exponential family. Count coordinates use
/// x_j - 1 and x_j + 1, with the backward term set to zero at x_j = 0; finite
/// coordinates use the cyclic order.
class DfdLoss final : public EtaLoss {
public:
    /// Every coordinate of every sample; n = number of samples.
    DfdLoss(const ModelView& model, std::span<const StatePoint> samples, const DomainSpec& domain,
            std::span<const std::size_t> units = {});
    /// One term per (lattice, site); n = number of site occurrences.
    DfdLoss(const MrfModel& model, std::span<const StatePoint> lattices, std::span<const SiteRef> units = {});

    std::size_t dimension() const override { return static_cast<std::size_t>(minus_.cols()); }
    std::size_t n() const override { return n_; }
    double value(const Eigen::VectorXd& eta) const override;
    void derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const override;

private:
    void reserve(std::size_t terms, std::size_t p);
    void push(const Eigen::VectorXd& dt_minus, double db_minus, bool has_minus, const Eigen::VectorXd& dt_plus,
              double db_plus);

    Eigen::MatrixXd minus_, plus_; ///< rows: T(x^-) - T(x) and T(x) - T(x^+)
    Eigen::VectorXd bminus_, bplus_;
    std::vector<char> has_minus_;
    std::size_t rows_ = 0;
    std::size_t n_ = 0;
};

/// Negative mean log full-conditional of every site occurrence.
class PseudoLikelihoodLoss final : public EtaLoss {
public:
    PseudoLikelihoodLoss(const MrfModel& model, std::span<const StatePoint> lattices,
                         std::span<const SiteRef> units = {});

    std::size_t dimension() const override { return p_; }
    std::size_t n() const override { return n_; }
    double value(const Eigen::VectorXd& eta) const override;
    void derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const override;

private:
    std::size_t p_ = 0;
    std::size_t states_ = 0;
    std::size_t n_ = 0;
    /// Row u * states + s holds T(x with site set to s) - T(x) for unit u.
    Eigen::MatrixXd delta_;
};

/// Univariate CMP negative log-likelihood with Z replaced by the sum over 0..K.
class TruncatedLikelihoodLoss final : public EtaLoss {
public:
    TruncatedLikelihoodLoss(std::span<const StatePoint> samples, std::int64_t truncation = 99);

    std::size_t dimension() const override { return 2; }
    std::size_t n() const override { return n_; }
    std::int64_t truncation() const { return k_; }
    double value(const Eigen::VectorXd& eta) const override;
    void derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const override;

private:
    Eigen::Vector2d mean_t_;
    Eigen::MatrixXd support_t_; ///< row y = T(y), y = 0..K
    std::int64_t k_;
    std::size_t n_ = 0;
};

double dfd_loss(const ExpFamilyModel& model, const Eigen::VectorXd& theta, std::span<const StatePoint> samples,
                const DomainSpec& domain);
double pseudo_likelihood_loss(const MrfModel& model, const Eigen::VectorXd& theta,
                              std::span<const StatePoint> lattices);
/// Throws ConfigError when K is below the largest observation.
double truncated_likelihood_loss(const CmpUnivariate& model, const Eigen::VectorXd& theta,
                                 std::span<const StatePoint> samples, std::int64_t truncation = 99);

/// p(s | nb) at one site, normalised over the |S| states.
std::vector<double> site_conditional(const MrfModel& model, const Eigen::VectorXd& theta,
                                     std::span<const std::int64_t> lattice, std::size_t site);

struct LaplaceOptions {
    std::size_t max_iterations = 200;
    double gradient_tol = 1e-9;
};

struct LaplaceFit {
    Eigen::VectorXd mode;
    Eigen::MatrixXd hessian;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;

    /// Second-order expansion about the mode as a QuadraticLoss, so that
    /// exp(-beta n L) matches the Laplace form under conjugate_update.
    QuadraticLoss quadratic(std::size_t n) const;
};

/// Damped Newton minimisation with backtracking. Throws NumericalError when the
/// loss is non-finite at the start or the Hessian at the end is not positive definite.
LaplaceFit minimise_loss(const EtaLoss& loss, const Eigen::VectorXd& init, LaplaceOptions opts = {});

enum class LossKind { Dfd, PseudoLikelihood, TruncatedLikelihood };
std::string to_string(LossKind kind);

/// exp(-beta n L(eta)) pi(eta) for a baseline loss.
class LossTarget {
public:
    /// Checks the log-target on 10 prior draws (seeded by `check`) and throws
    /// ConfigError if any is NaN or if none is finite.
    LossTarget(LossKind kind, std::shared_ptr<const EtaLoss> loss, GaussianPrior prior, double beta,
               const RngSpec& check = {});

    LossKind kind() const { return kind_; }
    double beta() const { return beta_; }
    const EtaLoss& loss() const { return *loss_; }
    const GaussianPrior& prior() const { return prior_; }

    double operator()(const Eigen::VectorXd& eta) const;
    LogTarget function() const;

private:
    LossKind kind_;
    std::shared_ptr<const EtaLoss> loss_;
    GaussianPrior prior_;
    double beta_;
    Eigen::MatrixXd prior_chol_;
};

} // namespace lrmbayes
