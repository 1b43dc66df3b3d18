#pragma once

#include "lrmbayes/domain.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lrmbayes {

enum class SignConstraint { None, Negative, Positive };

/// p(x) proportional to exp(eta(theta)^T T(x) + B(x)). The normaliser is never evaluated.
class ExpFamilyModel {
public:
    virtual ~ExpFamilyModel() = default;

    virtual std::string name() const = 0;
    /// Natural-parameter dimension p.
    virtual std::size_t dimension() const = 0;
    virtual Eigen::VectorXd statistic(const StatePoint& x) const = 0;
    virtual double base_measure(const StatePoint& x) const;

    /// T(x') - T(x) for x' = apply(x, m). Models with local structure override this.
    virtual Eigen::VectorXd statistic_delta(const StatePoint& x, const Move& m) const;
    virtual double base_delta(const StatePoint& x, const Move& m) const;

    virtual Eigen::VectorXd eta_of_theta(const Eigen::VectorXd& theta) const;
    virtual Eigen::VectorXd theta_of_eta(const Eigen::VectorXd& eta) const;
    /// log |det d eta / d theta|.
    virtual double log_jacobian(const Eigen::VectorXd& theta) const;
    virtual bool bijective_reparameterisation() const { return true; }
    virtual bool in_parameter_space(const Eigen::VectorXd& theta) const;
    /// Sign constraints on eta implied by the parameter space.
    virtual std::vector<SignConstraint> eta_constraints() const;

    /// eta^T T(x) + B(x).
    double log_unnormalised(const Eigen::VectorXd& theta, const StatePoint& x) const;
};

/// log p(x') / p(x) = eta^T (T(x') - T(x)) + B(x') - B(x).
double model_log_ratio(const ExpFamilyModel& model, const Eigen::VectorXd& theta, const StatePoint& x_prime,
                       const StatePoint& x);

/// log x!, via lgamma.
double log_factorial(std::int64_t x);

/// p(x) proportional to theta1^x (x!)^(-theta2); eta = (log theta1, theta2), T = (x, -log x!).
class CmpUnivariate final : public ExpFamilyModel {
public:
    std::string name() const override { return "cmp"; }
    std::size_t dimension() const override { return 2; }
    Eigen::VectorXd statistic(const StatePoint& x) const override;
    Eigen::VectorXd statistic_delta(const StatePoint& x, const Move& m) const override;
    Eigen::VectorXd eta_of_theta(const Eigen::VectorXd& theta) const override;
    Eigen::VectorXd theta_of_eta(const Eigen::VectorXd& eta) const override;
    double log_jacobian(const Eigen::VectorXd& theta) const override;
    bool in_parameter_space(const Eigen::VectorXd& theta) const override;
};

/// CMP graphical model on N_0^d. theta = ((theta_i), (theta_ij)_{i<j}, (theta_0i));
/// eta = (theta_i, -theta_ij, -theta_0i), T = (x_i, x_i x_j, log x_i!).
class CmpGraphical final : public ExpFamilyModel {
public:
    explicit CmpGraphical(std::size_t d);

    std::size_t variables() const { return d_; }
    std::string name() const override { return "cmp-graphical"; }
    std::size_t dimension() const override { return 2 * d_ + d_ * (d_ - 1) / 2; }
    Eigen::VectorXd statistic(const StatePoint& x) const override;
    Eigen::VectorXd statistic_delta(const StatePoint& x, const Move& m) const override;
    Eigen::VectorXd eta_of_theta(const Eigen::VectorXd& theta) const override;
    Eigen::VectorXd theta_of_eta(const Eigen::VectorXd& eta) const override;
    bool in_parameter_space(const Eigen::VectorXd& theta) const override;
    std::vector<SignConstraint> eta_constraints() const override;

    /// Position of theta_ij (i < j) in the parameter vector.
    std::size_t pair_index(std::size_t i, std::size_t j) const;

private:
    std::size_t d_;
};

/// Per-step quantities of the INGARCH-CMP recursion:
/// log lambda_t = c_t + theta1 b_t + theta2 a_t.
struct IngarchStatistics {
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
};

/// Forward recursion b_{t+1} = 1 + ar_phi b_t, a_{t+1} = ar_phi a_t + log(1 + x_t),
/// c_{t+1} = ar_phi c_t, starting from b_0 = a_0 = 0, c_0 = log lambda_0.
/// Entry t refers to observation x_t.
IngarchStatistics ingarch_statistics(std::span<const std::int64_t> series, double ar_phi, double lambda0 = 1.0);

/// The INGARCH-CMP conditional model of one observation for fixed ar_phi:
/// eta = (theta1, theta2, -theta3), T(x) = (b x, a x, log x!), B(x) = c x.
class IngarchStep final : public ExpFamilyModel {
public:
    IngarchStep(double a, double b, double c) : a_(a), b_(b), c_(c) {}

    std::string name() const override { return "ingarch-step"; }
    std::size_t dimension() const override { return 3; }
    Eigen::VectorXd statistic(const StatePoint& x) const override;
    double base_measure(const StatePoint& x) const override;
    Eigen::VectorXd statistic_delta(const StatePoint& x, const Move& m) const override;
    double base_delta(const StatePoint& x, const Move& m) const override;
    Eigen::VectorXd eta_of_theta(const Eigen::VectorXd& theta) const override;
    Eigen::VectorXd theta_of_eta(const Eigen::VectorXd& eta) const override;
    bool in_parameter_space(const Eigen::VectorXd& theta) const override;
    std::vector<SignConstraint> eta_constraints() const override;

private:
    double a_, b_, c_;
};

/// INGARCH-CMP series model: x_t | past ~ CMP(lambda_t, theta3),
/// log lambda_t = theta1 + ar_phi log lambda_{t-1} + theta2 log(1 + x_{t-1}).
struct IngarchCmp {
    double ar_phi = 0.0;
    double lambda0 = 1.0;

    std::vector<IngarchStep> step_models(std::span<const std::int64_t> series) const;
};

/// Markov random field on a 4-neighbour lattice:
/// p(x) proportional to exp(theta1 sum_j psi(x_j) + theta2 sum_{pairs} phi(x_j, x_j')),
/// each unordered neighbour pair counted once. Site states are indices 0..|S|-1.
class MrfModel final : public ExpFamilyModel {
public:
    /// Ising: S = {-1, +1} stored as {0, 1}; psi(s) = s, phi(s, s') = s s'.
    static MrfModel ising(const LatticeGeometry& geometry);
    /// Potts: phi(s, s') = 1[s = s'], no site term; theta = theta2 only.
    static MrfModel potts(const LatticeGeometry& geometry, std::int64_t states);

    std::string name() const override { return has_site_term_ ? "ising" : "potts"; }
    std::size_t dimension() const override { return has_site_term_ ? 2 : 1; }
    Eigen::VectorXd statistic(const StatePoint& x) const override;
    Eigen::VectorXd statistic_delta(const StatePoint& x, const Move& m) const override;

    const LatticeGeometry& geometry() const { return geometry_; }
    std::int64_t states() const { return states_; }
    bool has_site_term() const { return has_site_term_; }
    double site_potential(std::int64_t s) const { return psi_[static_cast<std::size_t>(s)]; }
    double pair_potential(std::int64_t s, std::int64_t t) const
    {
        return phi_[static_cast<std::size_t>(s * states_ + t)];
    }

    /// Change in (site, pair) statistics when site k changes from x_k to s.
    void site_change(std::span<const std::int64_t> lattice, std::size_t site, std::int64_t s, double& d_site,
                     double& d_pair) const;

    /// Unnormalised log conditional of each state at `site` given its neighbours.
    void conditional_log_weights(std::span<const std::int64_t> lattice, std::size_t site,
                                 const Eigen::VectorXd& theta, std::span<double> out) const;

    /// Value used for the magnetisation trace: psi for Ising, the state index for Potts.
    double magnetisation_value(std::int64_t s) const;

private:
    MrfModel(const LatticeGeometry& g, std::int64_t states, bool site_term, std::vector<double> psi,
             std::vector<double> phi);

    LatticeGeometry geometry_;
    std::int64_t states_;
    bool has_site_term_;
    std::vector<double> psi_;
    std::vector<double> phi_;
};

} // namespace lrmbayes
