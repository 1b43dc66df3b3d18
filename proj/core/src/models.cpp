#include "lrmbayes/models.hpp"

#include "lrmbayes/error.hpp"

#include <cmath>

namespace lrmbayes {

double log_factorial(std::int64_t x)
{
    return std::lgamma(static_cast<double>(x) + 1.0);
}

double ExpFamilyModel::base_measure(const StatePoint&) const
{
    return 0.0;
}

Eigen::VectorXd ExpFamilyModel::statistic_delta(const StatePoint& x, const Move& m) const
{
    return statistic(apply(x, m)) - statistic(x);
}

double ExpFamilyModel::base_delta(const StatePoint& x, const Move& m) const
{
    return base_measure(apply(x, m)) - base_measure(x);
}

Eigen::VectorXd ExpFamilyModel::eta_of_theta(const Eigen::VectorXd& theta) const
{
    return theta;
}

Eigen::VectorXd ExpFamilyModel::theta_of_eta(const Eigen::VectorXd& eta) const
{
    return eta;
}

double ExpFamilyModel::log_jacobian(const Eigen::VectorXd&) const
{
    return 0.0;
}

bool ExpFamilyModel::in_parameter_space(const Eigen::VectorXd& theta) const
{
    return theta.size() == static_cast<Eigen::Index>(dimension()) && theta.allFinite();
}

std::vector<SignConstraint> ExpFamilyModel::eta_constraints() const
{
    return std::vector<SignConstraint>(dimension(), SignConstraint::None);
}

double ExpFamilyModel::log_unnormalised(const Eigen::VectorXd& theta, const StatePoint& x) const
{
    return eta_of_theta(theta).dot(statistic(x)) + base_measure(x);
}

double model_log_ratio(const ExpFamilyModel& model, const Eigen::VectorXd& theta, const StatePoint& x_prime,
                       const StatePoint& x)
{
    if (x_prime.size() != x.size()) throw InvariantError("log ratio between states of different dimension");
    const Eigen::VectorXd eta = model.eta_of_theta(theta);
    // Single-coordinate differences go through the model's local delta.
    std::size_t changed = 0;
    std::size_t where = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] != x_prime[j]) {
            ++changed;
            where = j;
        }
    }
    if (changed == 0) return 0.0;
    if (changed == 1) {
        const Move m{where, x_prime[where]};
        return eta.dot(model.statistic_delta(x, m)) + model.base_delta(x, m);
    }
    return eta.dot(model.statistic(x_prime) - model.statistic(x)) + model.base_measure(x_prime) -
           model.base_measure(x);
}

// ---- univariate CMP

Eigen::VectorXd CmpUnivariate::statistic(const StatePoint& x) const
{
    Eigen::VectorXd t(2);
    t << static_cast<double>(x.at(0)), -log_factorial(x.at(0));
    return t;
}

Eigen::VectorXd CmpUnivariate::statistic_delta(const StatePoint& x, const Move& m) const
{
    Eigen::VectorXd t(2);
    t << static_cast<double>(m.value - x.at(0)), -(log_factorial(m.value) - log_factorial(x.at(0)));
    return t;
}

Eigen::VectorXd CmpUnivariate::eta_of_theta(const Eigen::VectorXd& theta) const
{
    Eigen::VectorXd eta(2);
    eta << std::log(theta(0)), theta(1);
    return eta;
}

Eigen::VectorXd CmpUnivariate::theta_of_eta(const Eigen::VectorXd& eta) const
{
    Eigen::VectorXd theta(2);
    theta << std::exp(eta(0)), eta(1);
    return theta;
}

double CmpUnivariate::log_jacobian(const Eigen::VectorXd& theta) const
{
    return -std::log(theta(0));
}

bool CmpUnivariate::in_parameter_space(const Eigen::VectorXd& theta) const
{
    if (theta.size() != 2 || !theta.allFinite()) return false;
    if (theta(0) <= 0.0) return false;
    if (theta(1) > 0.0) return true;
    return theta(1) == 0.0 && theta(0) < 1.0;
}

// ---- CMP graphical model

CmpGraphical::CmpGraphical(std::size_t d) : d_(d)
{
    if (d == 0) throw ConfigError("CMP graphical model needs d >= 1");
}

std::size_t CmpGraphical::pair_index(std::size_t i, std::size_t j) const
{
    if (i >= j || j >= d_) throw InvariantError("pair index needs i < j < d");
    // Row-major upper triangle after the d singleton entries.
    return d_ + i * d_ - i * (i + 1) / 2 + (j - i - 1);
}

Eigen::VectorXd CmpGraphical::statistic(const StatePoint& x) const
{
    if (x.size() != d_) throw InvariantError("state has the wrong dimension for the CMP graphical model");
    Eigen::VectorXd t(static_cast<Eigen::Index>(dimension()));
    std::size_t k = 0;
    for (std::size_t i = 0; i < d_; ++i) t(k++) = static_cast<double>(x[i]);
    for (std::size_t i = 0; i < d_; ++i)
        for (std::size_t j = i + 1; j < d_; ++j) t(k++) = static_cast<double>(x[i]) * static_cast<double>(x[j]);
    for (std::size_t i = 0; i < d_; ++i) t(k++) = log_factorial(x[i]);
    return t;
}

Eigen::VectorXd CmpGraphical::statistic_delta(const StatePoint& x, const Move& m) const
{
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
    const std::size_t k = m.coord;
    const double dx = static_cast<double>(m.value - x.at(k));
    t(static_cast<Eigen::Index>(k)) = dx;
    for (std::size_t j = 0; j < d_; ++j) {
        if (j == k) continue;
        const auto idx = j < k ? pair_index(j, k) : pair_index(k, j);
        t(static_cast<Eigen::Index>(idx)) = dx * static_cast<double>(x[j]);
    }
    t(static_cast<Eigen::Index>(d_ + d_ * (d_ - 1) / 2 + k)) = log_factorial(m.value) - log_factorial(x[k]);
    return t;
}

Eigen::VectorXd CmpGraphical::eta_of_theta(const Eigen::VectorXd& theta) const
{
    Eigen::VectorXd eta = theta;
    eta.tail(static_cast<Eigen::Index>(dimension() - d_)) *= -1.0;
    return eta;
}

Eigen::VectorXd CmpGraphical::theta_of_eta(const Eigen::VectorXd& eta) const
{
    return eta_of_theta(eta);
}

bool CmpGraphical::in_parameter_space(const Eigen::VectorXd& theta) const
{
    if (theta.size() != static_cast<Eigen::Index>(dimension()) || !theta.allFinite()) return false;
    return (theta.tail(static_cast<Eigen::Index>(d_)).array() > 0.0).all();
}

std::vector<SignConstraint> CmpGraphical::eta_constraints() const
{
    std::vector<SignConstraint> c(dimension(), SignConstraint::None);
    for (std::size_t i = dimension() - d_; i < dimension(); ++i) c[i] = SignConstraint::Negative;
    return c;
}

// ---- INGARCH-CMP

IngarchStatistics ingarch_statistics(std::span<const std::int64_t> series, double ar_phi, double lambda0)
{
    if (!(lambda0 > 0.0)) throw ConfigError("initial intensity lambda0 must be positive");
    if (!(std::abs(ar_phi) < 1.0)) throw ConfigError("AR coefficient must satisfy |phi| < 1");
    IngarchStatistics s;
    const std::size_t n = series.size();
    s.a.resize(n);
    s.b.resize(n);
    s.c.resize(n);
    double a = 0.0, b = 0.0, c = std::log(lambda0);
    for (std::size_t t = 0; t < n; ++t) {
        s.a[t] = a;
        s.b[t] = b;
        s.c[t] = c;
        if (series[t] < 0) throw InvariantError("count series contains a negative value");
        a = ar_phi * a + std::log1p(static_cast<double>(series[t]));
        b = 1.0 + ar_phi * b;
        c = ar_phi * c;
    }
    return s;
}

Eigen::VectorXd IngarchStep::statistic(const StatePoint& x) const
{
    const double v = static_cast<double>(x.at(0));
    Eigen::VectorXd t(3);
    t << b_ * v, a_ * v, log_factorial(x.at(0));
    return t;
}

double IngarchStep::base_measure(const StatePoint& x) const
{
    return c_ * static_cast<double>(x.at(0));
}

Eigen::VectorXd IngarchStep::statistic_delta(const StatePoint& x, const Move& m) const
{
    const double dx = static_cast<double>(m.value - x.at(0));
    Eigen::VectorXd t(3);
    t << b_ * dx, a_ * dx, log_factorial(m.value) - log_factorial(x.at(0));
    return t;
}

double IngarchStep::base_delta(const StatePoint& x, const Move& m) const
{
    return c_ * static_cast<double>(m.value - x.at(0));
}

Eigen::VectorXd IngarchStep::eta_of_theta(const Eigen::VectorXd& theta) const
{
    Eigen::VectorXd eta = theta;
    eta(2) = -theta(2);
    return eta;
}

Eigen::VectorXd IngarchStep::theta_of_eta(const Eigen::VectorXd& eta) const
{
    return eta_of_theta(eta);
}

bool IngarchStep::in_parameter_space(const Eigen::VectorXd& theta) const
{
    return theta.size() == 3 && theta.allFinite() && theta(2) > 0.0;
}

std::vector<SignConstraint> IngarchStep::eta_constraints() const
{
    return {SignConstraint::None, SignConstraint::None, SignConstraint::Negative};
}

std::vector<IngarchStep> IngarchCmp::step_models(std::span<const std::int64_t> series) const
{
    const auto s = ingarch_statistics(series, ar_phi, lambda0);
    std::vector<IngarchStep> out;
    out.reserve(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) out.emplace_back(s.a[t], s.b[t], s.c[t]);
    return out;
}

// ---- Markov random fields

MrfModel::MrfModel(const LatticeGeometry& g, std::int64_t states, bool site_term, std::vector<double> psi,
                   std::vector<double> phi)
    : geometry_(g), states_(states), has_site_term_(site_term), psi_(std::move(psi)), phi_(std::move(phi))
{
    if (g.sites() == 0) throw ConfigError("lattice must have at least one site");
}

MrfModel MrfModel::ising(const LatticeGeometry& geometry)
{
    return MrfModel(geometry, 2, true, {-1.0, 1.0}, {1.0, -1.0, -1.0, 1.0});
}

MrfModel MrfModel::potts(const LatticeGeometry& geometry, std::int64_t states)
{
    if (states < 2) throw ConfigError("Potts model needs at least two states");
    const auto s = static_cast<std::size_t>(states);
    std::vector<double> phi(s * s, 0.0);
    for (std::size_t i = 0; i < s; ++i) phi[i * s + i] = 1.0;
    return MrfModel(geometry, states, false, std::vector<double>(s, 0.0), std::move(phi));
}

Eigen::VectorXd MrfModel::statistic(const StatePoint& x) const
{
    if (x.size() != geometry_.sites()) throw InvariantError("lattice does not match the model geometry");
    double site = 0.0, pair = 0.0;
    const std::size_t rows = geometry_.rows, cols = geometry_.cols;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t k = r * cols + c;
            site += site_potential(x[k]);
            if (c + 1 < cols) pair += pair_potential(x[k], x[k + 1]);
            if (r + 1 < rows) pair += pair_potential(x[k], x[k + cols]);
        }
    }
    Eigen::VectorXd t(static_cast<Eigen::Index>(dimension()));
    if (has_site_term_)
        t << site, pair;
    else
        t << pair;
    return t;
}

void MrfModel::site_change(std::span<const std::int64_t> lattice, std::size_t site, std::int64_t s, double& d_site,
                           double& d_pair) const
{
    const std::int64_t old = lattice[site];
    d_site = site_potential(s) - site_potential(old);
    std::array<std::size_t, 4> nb{};
    const std::size_t k = geometry_.neighbours(site, nb);
    d_pair = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto v = lattice[nb[i]];
        d_pair += pair_potential(s, v) - pair_potential(old, v);
    }
}

Eigen::VectorXd MrfModel::statistic_delta(const StatePoint& x, const Move& m) const
{
    double ds = 0.0, dp = 0.0;
    site_change(x, m.coord, m.value, ds, dp);
    Eigen::VectorXd t(static_cast<Eigen::Index>(dimension()));
    if (has_site_term_)
        t << ds, dp;
    else
        t << dp;
    return t;
}

void MrfModel::conditional_log_weights(std::span<const std::int64_t> lattice, std::size_t site,
                                       const Eigen::VectorXd& theta, std::span<double> out) const
{
    const double t_site = has_site_term_ ? theta(0) : 0.0;
    const double t_pair = has_site_term_ ? theta(1) : theta(0);
    std::array<std::size_t, 4> nb{};
    const std::size_t k = geometry_.neighbours(site, nb);
    for (std::int64_t s = 0; s < states_; ++s) {
        double pair = 0.0;
        for (std::size_t i = 0; i < k; ++i) pair += pair_potential(s, lattice[nb[i]]);
        out[static_cast<std::size_t>(s)] = t_site * site_potential(s) + t_pair * pair;
    }
}

double MrfModel::magnetisation_value(std::int64_t s) const
{
    return has_site_term_ ? site_potential(s) : static_cast<double>(s);
}

} // namespace lrmbayes
