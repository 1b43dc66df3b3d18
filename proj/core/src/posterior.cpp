#include "lrmbayes/posterior.hpp"

#include "linalg.hpp"
#include "lrmbayes/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace lrmbayes {

ThetaPosterior::ThetaPosterior(GaussianPosterior eta_posterior, const ExpFamilyModel& model)
    : eta_(std::move(eta_posterior)), model_(&model)
{
    if (!model.bijective_reparameterisation())
        throw ConfigError("model '" + model.name() + "' has no bijective theta <-> eta map; transform unsupported");
    if (eta_.p() != model.dimension()) throw ConfigError("posterior dimension does not match the model");
    const auto llt = detail::robust_cholesky(eta_.Sigma, "posterior covariance");
    chol_ = llt.matrixL();
    log_norm_ = -0.5 * static_cast<double>(eta_.p()) * std::log(2.0 * std::numbers::pi) -
                chol_.diagonal().array().log().sum();
}

Eigen::MatrixXd ThetaPosterior::sample(std::size_t n, Rng& rng, TruncatedGibbsOptions opts) const
{
    const Eigen::MatrixXd etas = sample_eta_posterior(eta_, n, rng, opts);
    Eigen::MatrixXd out(etas.rows(), etas.cols());
    for (Eigen::Index i = 0; i < etas.rows(); ++i) out.row(i) = model_->theta_of_eta(etas.row(i).transpose()).transpose();
    return out;
}

double ThetaPosterior::log_density(const Eigen::VectorXd& theta) const
{
    if (theta.size() != eta_.mu.size()) throw ConfigError("theta has the wrong dimension");
    const Eigen::VectorXd e = model_->eta_of_theta(theta);
    if (!e.allFinite()) return -std::numeric_limits<double>::infinity();
    if (eta_.constrained()) {
        for (std::size_t j = 0; j < eta_.constraints.size(); ++j) {
            const auto c = eta_.constraints[j];
            const auto i = static_cast<Eigen::Index>(j);
            if ((c == SignConstraint::Negative && !(e(i) < 0.0)) || (c == SignConstraint::Positive && !(e(i) > 0.0)))
                return -std::numeric_limits<double>::infinity();
        }
    }
    const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(e - eta_.mu);
    return log_norm_ - 0.5 * z.squaredNorm() + model_->log_jacobian(theta);
}

ThetaPosterior posterior_on_theta(const GaussianPosterior& eta_posterior, const ExpFamilyModel& model)
{
    return ThetaPosterior(eta_posterior, model);
}

} // namespace lrmbayes
