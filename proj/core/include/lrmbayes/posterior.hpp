#pragma once

#include "lrmbayes/lrm.hpp"
#include "lrmbayes/models.hpp"
#include "lrmbayes/rng.hpp"
#include "lrmbayes/samplers.hpp"

#include <Eigen/Core>

namespace lrmbayes {

/// The conjugate eta-posterior pushed through theta = theta_of_eta(eta).
/// Holds a reference to the model, which must outlive this object.
class ThetaPosterior {
public:
    /// Throws ConfigError when the model does not declare a bijective reparameterisation.
    ThetaPosterior(GaussianPosterior eta_posterior, const ExpFamilyModel& model);

    const GaussianPosterior& eta() const { return eta_; }
    /// False when sign constraints truncate the Gaussian; log_density is then unnormalised.
    bool normalised() const { return !eta_.constrained(); }

    /// Rows are theta draws.
    Eigen::MatrixXd sample(std::size_t n, Rng& rng, TruncatedGibbsOptions opts = {}) const;
    /// log N(eta(theta); mu, Sigma) + log |d eta / d theta|; -inf where eta is undefined or a sign constraint fails.
    double log_density(const Eigen::VectorXd& theta) const;

private:
    GaussianPosterior eta_;
    const ExpFamilyModel* model_;
    Eigen::MatrixXd chol_; ///< lower Cholesky factor of Sigma
    double log_norm_ = 0.0;
};

ThetaPosterior posterior_on_theta(const GaussianPosterior& eta_posterior, const ExpFamilyModel& model);

} // namespace lrmbayes
