#include "lrmbayes/baselines.hpp"

#include "linalg.hpp"
#include "lrmbayes/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lrmbayes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxExp = 700.0;

std::vector<SiteRef> all_sites(std::size_t lattices, std::size_t sites)
{
    std::vector<SiteRef> out;
    out.reserve(lattices * sites);
    for (std::size_t l = 0; l < lattices; ++l)
        for (std::size_t s = 0; s < sites; ++s)
            out.push_back({static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(s)});
    return out;
}

void check_lattices(const MrfModel& model, std::span<const StatePoint> lattices)
{
    if (lattices.empty()) throw ConfigError("no lattices supplied");
    for (const auto& l : lattices)
        if (l.size() != model.geometry().sites()) throw ConfigError("lattice does not match the model geometry");
}

Eigen::VectorXd mrf_delta(const MrfModel& model, const StatePoint& lattice, std::size_t site, std::int64_t s)
{
    double ds = 0.0, dp = 0.0;
    model.site_change(lattice, site, s, ds, dp);
    Eigen::VectorXd t(static_cast<Eigen::Index>(model.dimension()));
    if (model.has_site_term())
        t << ds, dp;
    else
        t << dp;
    return t;
}

} // namespace

// ---- DFD

void DfdLoss::reserve(std::size_t terms, std::size_t p)
{
    const auto r = static_cast<Eigen::Index>(terms);
    const auto c = static_cast<Eigen::Index>(p);
    minus_.resize(r, c);
    plus_.resize(r, c);
    bminus_.resize(r);
    bplus_.resize(r);
    has_minus_.assign(terms, 0);
    rows_ = 0;
}

void DfdLoss::push(const Eigen::VectorXd& dt_minus, double db_minus, bool has_minus, const Eigen::VectorXd& dt_plus,
                   double db_plus)
{
    const auto i = static_cast<Eigen::Index>(rows_);
    minus_.row(i) = dt_minus.transpose();
    bminus_(i) = db_minus;
    has_minus_[rows_] = has_minus ? 1 : 0;
    plus_.row(i) = dt_plus.transpose();
    bplus_(i) = db_plus;
    ++rows_;
}

DfdLoss::DfdLoss(const ModelView& model, std::span<const StatePoint> samples, const DomainSpec& domain,
                 std::span<const std::size_t> units)
{
    if (samples.empty()) throw ConfigError("DFD loss needs at least one sample");
    std::vector<std::size_t> idx(units.begin(), units.end());
    if (idx.empty())
        for (std::size_t i = 0; i < samples.size(); ++i) idx.push_back(i);
    const std::size_t d = domain.dimension();
    const std::size_t p = model.dimension();
    reserve(idx.size() * d, p);
    n_ = idx.size();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (auto i : idx) {
        if (i >= samples.size()) throw ConfigError("sample index out of range");
        const auto& x = samples[i];
        if (!domain.contains(x)) throw ConfigError("sample " + to_string(x) + " lies outside the domain");
        const auto& m = model.at(i);
        for (std::size_t j = 0; j < d; ++j) {
            const auto& c = domain.coordinate(j);
            std::int64_t lo = x[j] - 1, hi = x[j] + 1;
            bool has_minus = true;
            if (c.kind == CoordinateKind::Finite) {
                lo = (x[j] + c.states - 1) % c.states;
                hi = (x[j] + 1) % c.states;
            } else if (x[j] == 0) {
                has_minus = false;
            }
            const Move mm{j, lo}, mp{j, hi};
            const Eigen::VectorXd dtm = has_minus ? m.statistic_delta(x, mm) : zero;
            const double dbm = has_minus ? m.base_delta(x, mm) : 0.0;
            push(dtm, dbm, has_minus, -m.statistic_delta(x, mp), -m.base_delta(x, mp));
        }
    }
}

DfdLoss::DfdLoss(const MrfModel& model, std::span<const StatePoint> lattices, std::span<const SiteRef> units)
{
    check_lattices(model, lattices);
    std::vector<SiteRef> all;
    if (units.empty()) {
        all = all_sites(lattices.size(), model.geometry().sites());
        units = all;
    }
    reserve(units.size(), model.dimension());
    n_ = units.size();
    const std::int64_t S = model.states();
    for (const auto& u : units) {
        const auto& x = lattices[u.lattice];
        const std::int64_t v = x[u.site];
        push(mrf_delta(model, x, u.site, (v + S - 1) % S), 0.0, true, -mrf_delta(model, x, u.site, (v + 1) % S),
             0.0);
    }
}

double DfdLoss::value(const Eigen::VectorXd& eta) const
{
    const Eigen::VectorXd em = 2.0 * (minus_ * eta + bminus_);
    const Eigen::VectorXd ep = plus_ * eta + bplus_;
    double total = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (has_minus_[i]) {
            if (em(k) > kMaxExp) return kInf;
            total += std::exp(em(k));
        }
        if (ep(k) > kMaxExp) return kInf;
        total -= 2.0 * std::exp(ep(k));
    }
    return total / static_cast<double>(n_);
}

void DfdLoss::derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const
{
    const auto p = eta.size();
    grad = Eigen::VectorXd::Zero(p);
    hess = Eigen::MatrixXd::Zero(p, p);
    const Eigen::VectorXd em = 2.0 * (minus_ * eta + bminus_);
    const Eigen::VectorXd ep = plus_ * eta + bplus_;
    for (std::size_t i = 0; i < rows_; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (has_minus_[i]) {
            const double e = std::exp(std::min(em(k), kMaxExp));
            grad.noalias() += 2.0 * e * minus_.row(k).transpose();
            hess.noalias() += 4.0 * e * minus_.row(k).transpose() * minus_.row(k);
        }
        const double e = std::exp(std::min(ep(k), kMaxExp));
        grad.noalias() -= 2.0 * e * plus_.row(k).transpose();
        hess.noalias() -= 2.0 * e * plus_.row(k).transpose() * plus_.row(k);
    }
    grad /= static_cast<double>(n_);
    hess /= static_cast<double>(n_);
}

// ---- pseudo-likelihood

PseudoLikelihoodLoss::PseudoLikelihoodLoss(const MrfModel& model, std::span<const StatePoint> lattices,
                                           std::span<const SiteRef> units)
    : p_(model.dimension()), states_(static_cast<std::size_t>(model.states()))
{
    check_lattices(model, lattices);
    std::vector<SiteRef> all;
    if (units.empty()) {
        all = all_sites(lattices.size(), model.geometry().sites());
        units = all;
    }
    n_ = units.size();
    delta_.resize(static_cast<Eigen::Index>(n_ * states_), static_cast<Eigen::Index>(p_));
    for (std::size_t u = 0; u < n_; ++u) {
        const auto& x = lattices[units[u].lattice];
        for (std::size_t s = 0; s < states_; ++s)
            delta_.row(static_cast<Eigen::Index>(u * states_ + s)) =
                mrf_delta(model, x, units[u].site, static_cast<std::int64_t>(s)).transpose();
    }
}

double PseudoLikelihoodLoss::value(const Eigen::VectorXd& eta) const
{
    const Eigen::VectorXd a = delta_ * eta;
    double total = 0.0;
    for (std::size_t u = 0; u < n_; ++u) {
        const auto seg = a.segment(static_cast<Eigen::Index>(u * states_), static_cast<Eigen::Index>(states_));
        const double m = seg.maxCoeff();
        total += m + std::log((seg.array() - m).exp().sum());
    }
    return total / static_cast<double>(n_);
}

void PseudoLikelihoodLoss::derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const
{
    const auto p = static_cast<Eigen::Index>(p_);
    grad = Eigen::VectorXd::Zero(p);
    hess = Eigen::MatrixXd::Zero(p, p);
    const Eigen::VectorXd a = delta_ * eta;
    const auto S = static_cast<Eigen::Index>(states_);
    for (std::size_t u = 0; u < n_; ++u) {
        const auto off = static_cast<Eigen::Index>(u * states_);
        const auto seg = a.segment(off, S);
        Eigen::VectorXd w = (seg.array() - seg.maxCoeff()).exp();
        w /= w.sum();
        const auto D = delta_.middleRows(off, S);
        const Eigen::VectorXd mean = D.transpose() * w;
        grad += mean;
        hess.noalias() += D.transpose() * w.asDiagonal() * D - mean * mean.transpose();
    }
    grad /= static_cast<double>(n_);
    hess /= static_cast<double>(n_);
}

// ---- truncated likelihood

TruncatedLikelihoodLoss::TruncatedLikelihoodLoss(std::span<const StatePoint> samples, std::int64_t truncation)
    : k_(truncation), n_(samples.size())
{
    if (samples.empty()) throw ConfigError("truncated likelihood needs at least one sample");
    if (truncation < 0) throw ConfigError("truncation level must be nonnegative");
    mean_t_.setZero();
    std::int64_t largest = 0;
    for (const auto& x : samples) {
        if (x.size() != 1 || x[0] < 0) throw ConfigError("truncated likelihood expects univariate counts");
        largest = std::max(largest, x[0]);
        mean_t_ += Eigen::Vector2d(static_cast<double>(x[0]), -log_factorial(x[0]));
    }
    if (truncation < largest)
        throw ConfigError("truncation level " + std::to_string(truncation) + " is below the largest observation " +
                          std::to_string(largest));
    mean_t_ /= static_cast<double>(n_);
    support_t_.resize(k_ + 1, 2);
    for (std::int64_t y = 0; y <= k_; ++y) support_t_.row(y) << static_cast<double>(y), -log_factorial(y);
}

double TruncatedLikelihoodLoss::value(const Eigen::VectorXd& eta) const
{
    if (eta.size() != 2) throw ConfigError("CMP eta must have two entries");
    if (!(eta(1) >= 0.0) || (eta(1) == 0.0 && !(eta(0) < 0.0))) return kInf; // outside the CMP parameter space
    const Eigen::VectorXd a = support_t_ * eta;
    const double m = a.maxCoeff();
    const double log_z = m + std::log((a.array() - m).exp().sum());
    return -eta.dot(mean_t_) + log_z;
}

void TruncatedLikelihoodLoss::derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& grad,
                                          Eigen::MatrixXd& hess) const
{
    const Eigen::VectorXd a = support_t_ * eta;
    Eigen::VectorXd w = (a.array() - a.maxCoeff()).exp();
    w /= w.sum();
    const Eigen::VectorXd mean = support_t_.transpose() * w;
    grad = mean - mean_t_;
    hess = support_t_.transpose() * w.asDiagonal() * support_t_ - mean * mean.transpose();
}

double dfd_loss(const ExpFamilyModel& model, const Eigen::VectorXd& theta, std::span<const StatePoint> samples,
                const DomainSpec& domain)
{
    return DfdLoss(model, samples, domain).value(model.eta_of_theta(theta));
}

double pseudo_likelihood_loss(const MrfModel& model, const Eigen::VectorXd& theta,
                              std::span<const StatePoint> lattices)
{
    return PseudoLikelihoodLoss(model, lattices).value(theta);
}

double truncated_likelihood_loss(const CmpUnivariate& model, const Eigen::VectorXd& theta,
                                 std::span<const StatePoint> samples, std::int64_t truncation)
{
    if (!model.in_parameter_space(theta)) return kInf;
    return TruncatedLikelihoodLoss(samples, truncation).value(model.eta_of_theta(theta));
}

std::vector<double> site_conditional(const MrfModel& model, const Eigen::VectorXd& theta,
                                     std::span<const std::int64_t> lattice, std::size_t site)
{
    std::vector<double> w(static_cast<std::size_t>(model.states()));
    model.conditional_log_weights(lattice, site, theta, w);
    const double m = *std::max_element(w.begin(), w.end());
    double total = 0.0;
    for (auto& v : w) total += (v = std::exp(v - m));
    for (auto& v : w) v /= total;
    return w;
}

// ---- Laplace

QuadraticLoss LaplaceFit::quadratic(std::size_t n) const
{
    QuadraticLoss q;
    q.Lambda = 0.5 * hessian;
    q.nu = q.Lambda * mode;
    q.c = value + mode.dot(q.nu);
    q.n = n;
    return q;
}

LaplaceFit minimise_loss(const EtaLoss& loss, const Eigen::VectorXd& init, LaplaceOptions opts)
{
    const auto p = init.size();
    if (p != static_cast<Eigen::Index>(loss.dimension())) throw ConfigError("initial value has the wrong dimension");
    LaplaceFit fit;
    fit.mode = init;
    fit.value = loss.value(init);
    if (!std::isfinite(fit.value)) throw NumericalError("loss is not finite at the starting point");

    Eigen::VectorXd g, step;
    Eigen::MatrixXd H;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
    for (fit.iterations = 0; fit.iterations < opts.max_iterations; ++fit.iterations) {
        loss.derivatives(fit.mode, g, H);
        if (!g.allFinite() || !H.allFinite()) throw NumericalError("non-finite loss derivatives");
        if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tol) {
            fit.converged = true;
            break;
        }
        const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
        bool moved = false;
        for (double ridge = 0.0; ridge < 1e8 * scale; ridge = ridge == 0.0 ? 1e-8 * scale : ridge * 10.0) {
            Eigen::LLT<Eigen::MatrixXd> llt(H + ridge * I);
            if (llt.info() != Eigen::Success) continue;
            step = -llt.solve(g);
            const double slope = g.dot(step);
            for (double t = 1.0; t > 1e-10; t *= 0.5) {
                const Eigen::VectorXd cand = fit.mode + t * step;
                const double v = loss.value(cand);
                if (std::isfinite(v) && v <= fit.value + 1e-4 * t * slope) {
                    moved = fit.value - v > 0.0 || t * step.norm() > 0.0;
                    fit.mode = cand;
                    fit.value = v;
                    break;
                }
            }
            if (moved) break;
        }
        if (!moved) break;
        if (step.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + fit.mode.lpNorm<Eigen::Infinity>())) {
            fit.converged = true;
            break;
        }
    }
    loss.derivatives(fit.mode, g, H);
    fit.hessian = 0.5 * (H + H.transpose());
    Eigen::LLT<Eigen::MatrixXd> check(fit.hessian);
    if (check.info() != Eigen::Success)
        throw NumericalError("loss Hessian at the minimiser is not positive definite (condition estimate " +
                             std::to_string(detail::condition_estimate(fit.hessian)) + ")");
    if (!fit.converged && g.lpNorm<Eigen::Infinity>() < std::sqrt(opts.gradient_tol)) fit.converged = true;
    return fit;
}

// ---- posterior targets

std::string to_string(LossKind kind)
{
    switch (kind) {
    case LossKind::Dfd: return "dfd";
    case LossKind::PseudoLikelihood: return "pl";
    case LossKind::TruncatedLikelihood: return "trunc-bayes";
    }
    return "unknown";
}

LossTarget::LossTarget(LossKind kind, std::shared_ptr<const EtaLoss> loss, GaussianPrior prior, double beta,
                       const RngSpec& check)
    : kind_(kind), loss_(std::move(loss)), prior_(std::move(prior)), beta_(beta)
{
    if (!loss_) throw ConfigError("loss target needs a loss");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive and finite");
    prior_.validate();
    if (prior_.mu.size() != static_cast<Eigen::Index>(loss_->dimension()))
        throw ConfigError("prior dimension does not match the loss");
    prior_chol_ = detail::robust_cholesky(prior_.Sigma, "prior covariance").matrixL();

    Rng rng = make_rng(check);
    std::normal_distribution<double> z;
    std::size_t finite = 0;
    Eigen::VectorXd e(prior_.mu.size());
    for (int draw = 0; draw < 10; ++draw) {
        for (Eigen::Index j = 0; j < e.size(); ++j) e(j) = z(rng);
        const double v = (*this)(prior_.mu + prior_chol_ * e);
        if (std::isnan(v)) throw ConfigError(to_string(kind) + " log-target is NaN at a prior draw");
        if (std::isfinite(v)) ++finite;
    }
    if (finite == 0 && !std::isfinite((*this)(prior_.mu)))
        throw ConfigError(to_string(kind) + " log-target is not finite anywhere on 10 prior draws");
}

double LossTarget::operator()(const Eigen::VectorXd& eta) const
{
    const double v = loss_->value(eta);
    if (std::isnan(v)) return v;
    if (!std::isfinite(v)) return -kInf;
    const Eigen::VectorXd r = prior_chol_.triangularView<Eigen::Lower>().solve(eta - prior_.mu);
    return -beta_ * static_cast<double>(loss_->n()) * v - 0.5 * r.squaredNorm();
}

LogTarget LossTarget::function() const
{
    return [this](const Eigen::VectorXd& eta) { return (*this)(eta); };
}

} // namespace lrmbayes
