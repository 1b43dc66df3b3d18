#include "lrmbayes/samplers.hpp"

#include "linalg.hpp"
#include "parallel.hpp"
#include "lrmbayes/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace lrmbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double std_normal(Rng& rng)
{
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

std::int64_t sample_categorical(std::span<double> log_w, Rng& rng)
{
    const double m = *std::max_element(log_w.begin(), log_w.end());
    double total = 0.0;
    for (auto& v : log_w) {
        v = std::exp(v - m);
        total += v;
    }
    double u = uniform01(rng) * total;
    for (std::size_t s = 0; s < log_w.size(); ++s) {
        u -= log_w[s];
        if (u < 0.0) return static_cast<std::int64_t>(s);
    }
    return static_cast<std::int64_t>(log_w.size() - 1);
}

std::string param_name(const std::vector<std::string>& names, std::size_t j)
{
    return j < names.size() ? names[j] : "theta" + std::to_string(j + 1);
}

std::vector<std::string> default_names(std::size_t p, const std::vector<std::string>& given)
{
    std::vector<std::string> out(p);
    for (std::size_t j = 0; j < p; ++j) out[j] = param_name(given, j);
    return out;
}

std::string format_vector(const Eigen::VectorXd& v)
{
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
    os << ')';
    return os.str();
}

} // namespace

// ---- CMP rejection sampling

CmpRejectionSampler::CmpRejectionSampler(double theta1, double theta2, CmpRejectionOptions opts)
    : theta1_(theta1), theta2_(theta2), poisson_(theta2 >= 1.0)
{
    if (!(theta1 > 0.0) || !(theta2 >= 0.0) || !std::isfinite(theta1) || !std::isfinite(theta2))
        throw ConfigError("CMP parameters must satisfy theta1 > 0, theta2 >= 0");
    if (theta2 == 0.0 && !(theta1 < 1.0)) throw ConfigError("CMP with theta2 = 0 needs theta1 < 1");
    if (opts.truncation < 1) throw ConfigError("envelope truncation must be positive");

    if (poisson_) {
        // (x!)^(1 - theta2) <= 1, attained at x = 0.
        log_m_ = 0.0;
        return;
    }
    if (theta2 == 0.0) {
        geo_r_ = theta1;
    } else {
        // geometric success probability 2 nu / (2 mu nu + 1 + nu), mu = theta1^(1 / nu)
        const double mu = std::pow(theta1, 1.0 / theta2);
        geo_r_ = 1.0 - 2.0 * theta2 / (2.0 * mu * theta2 + 1.0 + theta2);
    }
    // Log-ratio increments log(theta1 / r) - theta2 log(x + 1) fall in x; scan past the turning point.
    std::int64_t last = opts.truncation;
    if (theta2 > 0.0) {
        const double turn = std::exp((std::log(theta1) - std::log(geo_r_)) / theta2);
        if (turn < 1e7) last = std::max(last, static_cast<std::int64_t>(std::ceil(turn)));
    }
    log_m_ = kNegInf;
    for (std::int64_t x = 0; x <= last; ++x) log_m_ = std::max(log_m_, log_target(x) - log_proposal(x));
    const double slope =
        std::log(theta1) - theta2 * std::log(static_cast<double>(last) + 1.0) - std::log(geo_r_);
    if (!std::isfinite(log_m_) || slope > 0.0)
        throw NumericalError("CMP envelope constant is not bounded within the scanned range 0.." +
                             std::to_string(last) + "; widen the truncation");
}

double CmpRejectionSampler::log_target(std::int64_t x) const
{
    return static_cast<double>(x) * std::log(theta1_) - theta2_ * log_factorial(x);
}

double CmpRejectionSampler::log_proposal(std::int64_t x) const
{
    return std::log1p(-geo_r_) + static_cast<double>(x) * std::log(geo_r_);
}

std::int64_t CmpRejectionSampler::operator()(Rng& rng) const
{
    if (poisson_) {
        std::poisson_distribution<std::int64_t> prop(theta1_);
        for (;;) {
            const auto x = prop(rng);
            if (std::log(uniform01(rng)) < (1.0 - theta2_) * log_factorial(x)) return x;
        }
    }
    std::geometric_distribution<std::int64_t> prop(1.0 - geo_r_);
    for (;;) {
        const auto x = prop(rng);
        if (std::log(uniform01(rng)) < log_target(x) - log_proposal(x) - log_m_) return x;
    }
}

std::vector<std::int64_t> sample_cmp_rejection(double theta1, double theta2, std::size_t n, Rng& rng,
                                               CmpRejectionOptions opts)
{
    const CmpRejectionSampler sampler(theta1, theta2, opts);
    std::vector<std::int64_t> out(n);
    for (auto& x : out) x = sampler(rng);
    return out;
}

// ---- lattice Gibbs

void gibbs_sweeps(const MrfModel& model, const Eigen::VectorXd& theta, StatePoint& lattice, std::size_t sweeps,
                  Rng& rng)
{
    const std::size_t d = model.geometry().sites();
    if (lattice.size() != d) throw ConfigError("lattice does not match the model geometry");
    std::vector<double> w(static_cast<std::size_t>(model.states()));
    std::uniform_int_distribution<std::size_t> pick(0, d - 1);
    for (std::size_t s = 0; s < sweeps; ++s) {
        for (std::size_t u = 0; u < d; ++u) {
            const std::size_t k = pick(rng);
            model.conditional_log_weights(lattice, k, theta, w);
            lattice[k] = sample_categorical(w, rng);
        }
    }
}

GibbsResult gibbs_lattice(const MrfModel& model, const Eigen::VectorXd& theta, std::size_t sweeps, Rng& rng,
                          const StatePoint* init)
{
    if (theta.size() != static_cast<Eigen::Index>(model.dimension())) throw ConfigError("theta has the wrong dimension");
    const std::size_t d = model.geometry().sites();
    GibbsResult res;
    if (init) {
        if (init->size() != d) throw ConfigError("initial lattice does not match the model geometry");
        res.lattice = *init;
    } else {
        std::uniform_int_distribution<std::int64_t> state(0, model.states() - 1);
        res.lattice.resize(d);
        for (auto& v : res.lattice) v = state(rng);
    }
    double msum = 0.0;
    for (auto v : res.lattice) msum += model.magnetisation_value(v);

    std::vector<double> w(static_cast<std::size_t>(model.states()));
    std::uniform_int_distribution<std::size_t> pick(0, d - 1);
    res.magnetisation.reserve(sweeps);
    for (std::size_t s = 0; s < sweeps; ++s) {
        for (std::size_t u = 0; u < d; ++u) {
            const std::size_t k = pick(rng);
            model.conditional_log_weights(res.lattice, k, theta, w);
            const auto next = sample_categorical(w, rng);
            msum += model.magnetisation_value(next) - model.magnetisation_value(res.lattice[k]);
            res.lattice[k] = next;
        }
        res.magnetisation.push_back(msum / static_cast<double>(d));
    }
    return res;
}

std::vector<std::int64_t> simulate_ingarch(const Eigen::VectorXd& theta, double ar_phi, std::size_t length, Rng& rng,
                                           double lambda0, std::size_t warmup)
{
    if (theta.size() != 3) throw ConfigError("INGARCH-CMP needs theta = (theta1, theta2, theta3)");
    if (!(std::abs(ar_phi) < 1.0)) throw ConfigError("AR coefficient must satisfy |phi| < 1");
    if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be positive");
    std::vector<std::int64_t> out;
    out.reserve(length);
    double log_lambda = std::log(lambda0);
    for (std::size_t t = 0; t < warmup + length; ++t) {
        const CmpRejectionSampler draw(std::exp(log_lambda), theta(2));
        const auto x = draw(rng);
        if (t >= warmup) out.push_back(x);
        log_lambda = theta(0) + ar_phi * log_lambda + theta(1) * std::log1p(static_cast<double>(x));
    }
    return out;
}

// ---- chains

Eigen::MatrixXd ChainSet::pooled() const
{
    const std::size_t keep = iterations() > burn_in ? iterations() - burn_in : 0;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(keep * chains.size()), static_cast<Eigen::Index>(p()));
    for (std::size_t c = 0; c < chains.size(); ++c)
        out.middleRows(static_cast<Eigen::Index>(c * keep), static_cast<Eigen::Index>(keep)) =
            chains[c].bottomRows(static_cast<Eigen::Index>(keep));
    return out;
}

Eigen::VectorXd ChainSet::mean() const
{
    const auto all = pooled();
    if (all.rows() == 0) throw ConfigError("no post-burn-in draws");
    return all.colwise().mean();
}

Eigen::MatrixXd ChainSet::covariance() const
{
    const auto all = pooled();
    if (all.rows() < 2) throw ConfigError("need at least two post-burn-in draws");
    const Eigen::MatrixXd centred = all.rowwise() - all.colwise().mean();
    return centred.transpose() * centred / static_cast<double>(all.rows() - 1);
}

Eigen::VectorXd ChainSet::sd() const
{
    return covariance().diagonal().cwiseSqrt();
}

void ChainSet::write_csv(std::ostream& os) const
{
    os << "chain,iter";
    for (const auto& n : names) os << ',' << n;
    os << "\r\n";
    const auto old = os.precision(17);
    for (std::size_t c = 0; c < chains.size(); ++c) {
        for (Eigen::Index i = 0; i < chains[c].rows(); ++i) {
            os << c << ',' << i;
            for (Eigen::Index j = 0; j < chains[c].cols(); ++j) os << ',' << chains[c](i, j);
            os << "\r\n";
        }
    }
    os.precision(old);
}

GelmanRubinReport gelman_rubin(const ChainSet& set)
{
    if (set.chain_count() < 2) throw ConfigError("Gelman-Rubin needs at least two chains");
    const std::size_t n = set.iterations() > set.burn_in ? set.iterations() - set.burn_in : 0;
    if (n < 10) throw ConfigError("Gelman-Rubin needs at least 10 post-burn-in draws per chain");
    const std::size_t m = set.chain_count();
    const auto p = static_cast<Eigen::Index>(set.p());

    GelmanRubinReport r;
    r.chains = m;
    r.draws = n;
    r.between = Eigen::VectorXd::Zero(p);
    r.within = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd means(static_cast<Eigen::Index>(m), p);
    for (std::size_t c = 0; c < m; ++c) {
        const auto post = set.chains[c].bottomRows(static_cast<Eigen::Index>(n));
        const Eigen::RowVectorXd mu = post.colwise().mean();
        means.row(static_cast<Eigen::Index>(c)) = mu;
        r.within += ((post.rowwise() - mu).array().square().colwise().sum() / static_cast<double>(n - 1)).matrix().transpose();
    }
    r.within /= static_cast<double>(m);
    const Eigen::RowVectorXd grand = means.colwise().mean();
    r.between = (static_cast<double>(n) / static_cast<double>(m - 1)) *
                (means.rowwise() - grand).array().square().colwise().sum().matrix().transpose();

    const double dn = static_cast<double>(n);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!(r.within(j) > 0.0)) {
            r.rhat.emplace_back(std::nullopt);
            r.degenerate = true;
            continue;
        }
        const double v = (dn - 1.0) / dn * r.within(j) + r.between(j) / dn;
        r.rhat.emplace_back(std::sqrt(v / r.within(j)));
    }
    return r;
}

// ---- random-walk Metropolis-Hastings

ChainSet rwmh(const LogTarget& log_target, const Eigen::VectorXd& init, const Eigen::VectorXd& scales,
              const RwmhOptions& opts, const RngSpec& spec)
{
    if (init.size() != scales.size()) throw ConfigError("init and proposal scales differ in size");
    if (opts.chains == 0 || opts.iterations == 0) throw ConfigError("rwmh needs at least one chain and one iteration");
    if ((scales.array() < 0.0).any()) throw ConfigError("proposal scales must be nonnegative");
    const auto p = init.size();
    ChainSet set;
    set.names = default_names(static_cast<std::size_t>(p), opts.names);
    set.burn_in = opts.burn_in.value_or(opts.iterations / 4);
    if (set.burn_in >= opts.iterations) throw ConfigError("burn-in must be shorter than the chain");
    set.chains.resize(opts.chains);
    set.acceptance.resize(opts.chains);

    detail::parallel_for(opts.chains, opts.threads, [&](std::size_t c) {
        Rng rng = make_rng(spec.child(c));
        Eigen::VectorXd x = init;
        if (c > 0 && opts.init_spread > 0.0)
            for (Eigen::Index j = 0; j < p; ++j) x(j) += opts.init_spread * scales(j) * std_normal(rng);
        double lp = log_target(x);
        if (!std::isfinite(lp)) throw ConfigError("log target is not finite at the initial point " + format_vector(x));
        Eigen::MatrixXd draws(static_cast<Eigen::Index>(opts.iterations), p);
        std::size_t accepted = 0;
        Eigen::VectorXd prop(p);
        for (std::size_t it = 0; it < opts.iterations; ++it) {
            for (Eigen::Index j = 0; j < p; ++j) prop(j) = x(j) + scales(j) * std_normal(rng);
            const double lpp = log_target(prop);
            if (std::isnan(lpp)) throw NumericalError("log target returned NaN at " + format_vector(prop));
            if (lpp != kNegInf && std::log(uniform01(rng)) < lpp - lp) {
                x = prop;
                lp = lpp;
                ++accepted;
            }
            draws.row(static_cast<Eigen::Index>(it)) = x.transpose();
        }
        set.chains[c] = std::move(draws);
        set.acceptance[c] = static_cast<double>(accepted) / static_cast<double>(opts.iterations);
    });
    return set;
}

// ---- INGARCH partial conjugacy

IngarchLrm::IngarchLrm(std::span<const std::int64_t> series, IngarchLrmOptions opts,
                       std::span<const std::size_t> units)
    : series_(series.begin(), series.end()), lambda0_(opts.lambda0)
{
    if (series_.size() < 2) throw ConfigError("INGARCH fit needs a series of length >= 2");
    if (!(opts.lambda0 > 0.0)) throw ConfigError("lambda0 must be positive");
    for (auto v : series_)
        if (v < 0) throw ConfigError("count series contains a negative value");

    std::vector<std::size_t> steps;
    if (units.empty()) {
        for (std::size_t t = 1; t < series_.size(); ++t) steps.push_back(t);
    } else {
        for (auto t : units) {
            if (t == 0 || t >= series_.size()) throw ConfigError("INGARCH loss units must lie in 1..T-1");
            steps.push_back(t);
        }
    }
    units_ = steps.size();

    std::vector<StatePoint> values;
    values.reserve(steps.size());
    for (auto t : steps) values.push_back({series_[t]});
    std::optional<BasePmf> base;
    if (opts.alpha > 0.0) base = BasePmf::count_mixture_for(values, opts.epsilon);
    const SmoothedPmf marginal(fit_empirical(values), opts.alpha, base);
    const auto matching = build_offset_matching_set(opts.offsets, DomainSpec::counts(1));

    // Lag-one conditional counts C(prev, x).
    std::map<std::int64_t, EmpiricalCounts> lag;
    if (opts.pmf == IngarchPmfKind::Lag1)
        for (auto t : steps) lag[series_[t - 1]].add({series_[t]});

    auto log_mass = [&](std::size_t t, const StatePoint& x) {
        if (opts.pmf == IngarchPmfKind::Marginal) return marginal.log_prob(x);
        const auto& counts = lag[series_[t - 1]];
        const double c = static_cast<double>(counts.count(x));
        const double m = opts.alpha > 0.0 ? opts.alpha * marginal.prob(x) : 0.0;
        return c + m > 0.0 ? std::log(c + m) : kNegInf;
    };

    std::vector<Move> moves;
    for (auto t : steps) {
        const StatePoint x{series_[t]};
        matching.moves_into(x, moves);
        const double f = 1.0 / static_cast<double>(moves.size());
        const double lx = log_mass(t, x);
        for (const auto& m : moves) {
            const StatePoint xp{m.value};
            const double lxp = log_mass(t, xp);
            if (lx == kNegInf || lxp == kNegInf) continue;
            terms_.push_back(Term{static_cast<std::uint32_t>(t), static_cast<double>(m.value - x[0]),
                                  log_factorial(m.value) - log_factorial(x[0]), lxp - lx, f});
        }
    }
    if (terms_.empty()) throw DegenerateLossError("every INGARCH loss term was omitted");
}

QuadraticLoss IngarchLrm::quadratic(double ar_phi) const
{
    const auto s = ingarch_statistics(series_, ar_phi, lambda0_);
    Eigen::Matrix3d L = Eigen::Matrix3d::Zero();
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    double c = 0.0;
    for (const auto& term : terms_) {
        const Eigen::Vector3d dt(s.b[term.t] * term.dx, s.a[term.t] * term.dx, term.dlogfact);
        const double db = s.c[term.t] * term.dx;
        L.noalias() += term.f * dt * dt.transpose();
        v.noalias() += term.f * (term.lr - db) * dt;
        c += term.f * (db * db - 2.0 * db * term.lr);
    }
    QuadraticLoss q;
    const double inv_n = 1.0 / static_cast<double>(units_);
    q.Lambda = L * inv_n;
    q.nu = v * inv_n;
    q.c = c * inv_n;
    q.n = units_;
    q.terms = terms_.size();
    return q;
}

double IngarchLrm::loss(const Eigen::VectorXd& theta, double ar_phi) const
{
    const auto s = ingarch_statistics(series_, ar_phi, lambda0_);
    double total = 0.0;
    for (const auto& term : terms_) {
        const double r = (theta(0) * s.b[term.t] + theta(1) * s.a[term.t] + s.c[term.t]) * term.dx -
                         theta(2) * term.dlogfact;
        total += term.f * (r * r - 2.0 * r * term.lr);
    }
    return total / static_cast<double>(units_);
}

ChainSet metropolis_within_gibbs_ingarch(const IngarchLrm& lrm, const IngarchMwgOptions& opts, const RngSpec& spec)
{
    opts.prior.validate();
    if (opts.prior.mu.size() != 3) throw ConfigError("INGARCH prior must be three-dimensional");
    if (!(opts.beta > 0.0)) throw ConfigError("beta must be positive");
    if (opts.burn_in >= opts.iterations) throw ConfigError("burn-in must be shorter than the chain");
    if (!(std::abs(opts.phi_init) < 1.0)) throw ConfigError("initial AR coefficient must satisfy |phi| < 1");
    if (!(opts.phi_prior_sd > 0.0)) throw ConfigError("phi prior SD must be positive");

    ChainSet set;
    set.names = {"theta1", "theta2", "theta3", "phi"};
    set.burn_in = opts.burn_in;
    set.chains.resize(opts.chains);
    set.acceptance.resize(opts.chains);
    const double scale = opts.beta * static_cast<double>(lrm.n());
    const auto phi_log_prior = [&](double phi) {
        const double z = (phi - opts.phi_prior_mean) / opts.phi_prior_sd;
        return -0.5 * z * z;
    };

    detail::parallel_for(opts.chains, opts.threads, [&](std::size_t c) {
        Rng rng = make_rng(spec.child(c));
        double phi = opts.phi_init;
        Eigen::MatrixXd draws(static_cast<Eigen::Index>(opts.iterations), 4);
        std::size_t accepted = 0, proposed = 0;
        Eigen::VectorXd z(3);
        for (std::size_t it = 0; it < opts.iterations; ++it) {
            // theta | phi: exact draw from the conjugate posterior on eta = (theta1, theta2, -theta3)
            const auto post = conjugate_update(opts.prior, lrm.quadratic(phi), opts.beta);
            const Eigen::LLT<Eigen::MatrixXd> llt(post.Sigma);
            for (int j = 0; j < 3; ++j) z(j) = std_normal(rng);
            Eigen::VectorXd theta = post.mu + llt.matrixL() * z;
            theta(2) = -theta(2);

            if (opts.phi_scale > 0.0) {
                double lp = -scale * lrm.loss(theta, phi) + phi_log_prior(phi);
                for (std::size_t k = 0; k < opts.phi_updates; ++k) {
                    const double prop = phi + opts.phi_scale * std_normal(rng);
                    ++proposed;
                    if (!(std::abs(prop) < 1.0)) continue; // stationarity guard
                    const double lpp = -scale * lrm.loss(theta, prop) + phi_log_prior(prop);
                    if (std::isnan(lpp)) throw NumericalError("INGARCH phi target is NaN");
                    if (std::log(uniform01(rng)) < lpp - lp) {
                        phi = prop;
                        lp = lpp;
                        ++accepted;
                    }
                }
            }
            draws.row(static_cast<Eigen::Index>(it)) << theta(0), theta(1), theta(2), phi;
        }
        set.chains[c] = std::move(draws);
        set.acceptance[c] = proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 1.0;
    });
    return set;
}

// ---- exchange algorithm

ChainSet exchange_mcmc_mrf(const MrfModel& model, const StatePoint& observed, const GaussianPrior& prior,
                           const ExchangeOptions& opts, const RngSpec& spec)
{
    prior.validate();
    const auto p = static_cast<Eigen::Index>(model.dimension());
    if (prior.mu.size() != p) throw ConfigError("prior dimension does not match the model");
    if (observed.size() != model.geometry().sites()) throw ConfigError("observed lattice does not match the geometry");
    if (opts.burn_in >= opts.iterations) throw ConfigError("burn-in must be shorter than the chain");
    Eigen::VectorXd step = opts.proposal_scale;
    if (step.size() == 0) step = 0.1 * prior.Sigma.diagonal().cwiseSqrt();
    if (step.size() != p) throw ConfigError("proposal scale has the wrong dimension");

    const auto prior_llt = detail::robust_cholesky(prior.Sigma, "prior covariance");
    const auto log_prior = [&](const Eigen::VectorXd& th) {
        const Eigen::VectorXd r = prior_llt.matrixL().solve(th - prior.mu);
        return -0.5 * r.squaredNorm();
    };
    const Eigen::VectorXd t_obs = model.statistic(observed);

    ChainSet set;
    set.names = model.has_site_term() ? std::vector<std::string>{"theta1", "theta2"} : std::vector<std::string>{"theta2"};
    set.burn_in = opts.burn_in;
    set.chains.resize(opts.chains);
    set.acceptance.resize(opts.chains);

    detail::parallel_for(opts.chains, opts.threads, [&](std::size_t c) {
        Rng rng = make_rng(spec.child(c));
        Eigen::VectorXd theta = opts.init.value_or(prior.mu);
        if (theta.size() != p) throw ConfigError("initial value has the wrong dimension");
        Eigen::MatrixXd draws(static_cast<Eigen::Index>(opts.iterations), p);
        std::size_t accepted = 0;
        StatePoint aux;
        Eigen::VectorXd prop(p);
        for (std::size_t it = 0; it < opts.iterations; ++it) {
            for (Eigen::Index j = 0; j < p; ++j) prop(j) = theta(j) + step(j) * std_normal(rng);
            aux = observed;
            gibbs_sweeps(model, prop, aux, opts.inner_sweeps, rng);
            const Eigen::VectorXd t_aux = model.statistic(aux);
            const double log_a = (prop - theta).dot(t_obs - t_aux) + log_prior(prop) - log_prior(theta);
            if (std::log(uniform01(rng)) < log_a) {
                theta = prop;
                ++accepted;
            }
            draws.row(static_cast<Eigen::Index>(it)) = theta.transpose();
        }
        set.chains[c] = std::move(draws);
        set.acceptance[c] = static_cast<double>(accepted) / static_cast<double>(opts.iterations);
    });
    return set;
}

// ---- posterior predictive for the CMP graphical model

std::vector<StatePoint> mh_posterior_predictive_cmp_graphical(const CmpGraphical& model,
                                                              const Eigen::MatrixXd& theta_draws,
                                                              std::size_t per_draw, const PredictiveOptions& opts,
                                                              Rng& rng)
{
    if (theta_draws.cols() != static_cast<Eigen::Index>(model.dimension()))
        throw ConfigError("parameter draws have the wrong dimension");
    if (opts.thin == 0) throw ConfigError("thinning interval must be positive");
    const std::size_t d = model.variables();
    std::uniform_int_distribution<std::size_t> coord(0, d - 1);
    std::vector<StatePoint> out;
    out.reserve(static_cast<std::size_t>(theta_draws.rows()) * per_draw);
    StatePoint x(d, 0);
    for (Eigen::Index r = 0; r < theta_draws.rows(); ++r) {
        const Eigen::VectorXd eta = model.eta_of_theta(theta_draws.row(r).transpose());
        const std::size_t steps = opts.burn_in + per_draw * opts.thin;
        for (std::size_t s = 1; s <= steps; ++s) {
            const std::size_t j = coord(rng);
            const std::int64_t v = x[j] + (uniform01(rng) < 0.5 ? -1 : 1);
            if (v >= 0) {
                const Move m{j, v};
                const double lr = eta.dot(model.statistic_delta(x, m));
                if (std::log(uniform01(rng)) < lr) x[j] = v;
            }
            if (s > opts.burn_in && (s - opts.burn_in) % opts.thin == 0) out.push_back(x);
        }
    }
    return out;
}

// ---- Gaussian draws

double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng)
{
    if (!(sd > 0.0)) throw InvariantError("truncated normal needs sd > 0");
    if (!(lo < hi)) throw InvariantError("truncated normal needs lo < hi");
    double a = (lo - mean) / sd;
    double b = (hi - mean) / sd;
    bool flip = false;
    if (b <= 0.0) { // mirror an interval left of zero onto the right
        std::swap(a, b);
        a = -a;
        b = -b;
        flip = true;
    }
    double z = 0.0;
    if (a < 0.0) {
        // interval straddles zero
        if (b - a >= 2.5) {
            do z = std_normal(rng);
            while (z < a || z > b);
        } else {
            do z = a + (b - a) * uniform01(rng);
            while (std::log(uniform01(rng)) >= -0.5 * z * z);
        }
    } else {
        const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
        if (std::isfinite(b) && b - a < 1.0 / (a + 1.0)) {
            do z = a + (b - a) * uniform01(rng);
            while (std::log(uniform01(rng)) >= 0.5 * (a * a - z * z));
        } else {
            // exponential proposal in the tail
            std::exponential_distribution<double> ex(lambda);
            for (;;) {
                z = a + ex(rng);
                if (z > b) continue;
                if (std::log(uniform01(rng)) < -0.5 * (z - lambda) * (z - lambda)) break;
            }
        }
    }
    if (flip) z = -z;
    return mean + sd * z;
}

Eigen::MatrixXd sample_eta_posterior(const GaussianPosterior& post, std::size_t n, Rng& rng,
                                     TruncatedGibbsOptions opts)
{
    const auto p = post.mu.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), p);
    if (!post.constrained()) {
        const auto llt = detail::robust_cholesky(post.Sigma, "posterior covariance");
        const Eigen::MatrixXd L = llt.matrixL();
        Eigen::VectorXd z(p);
        for (std::size_t i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) z(j) = std_normal(rng);
            out.row(static_cast<Eigen::Index>(i)) = (post.mu + L * z).transpose();
        }
        return out;
    }
    if (post.constraints.size() != static_cast<std::size_t>(p)) throw ConfigError("constraint list has the wrong size");
    if (opts.thin == 0) throw ConfigError("thinning interval must be positive");

    const Eigen::MatrixXd Q = detail::spd_inverse(detail::robust_cholesky(post.Sigma, "posterior covariance"));
    const Eigen::VectorXd sd = post.sd();
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::VectorXd eta = post.mu;
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto c = post.constraints[static_cast<std::size_t>(j)];
        if (c == SignConstraint::Negative && eta(j) >= 0.0) eta(j) = -1e-3 * sd(j);
        if (c == SignConstraint::Positive && eta(j) <= 0.0) eta(j) = 1e-3 * sd(j);
    }
    const std::size_t total = opts.burn_in + n * opts.thin;
    std::size_t kept = 0;
    for (std::size_t s = 1; s <= total; ++s) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const double qjj = Q(j, j);
            const double shift = Q.row(j).dot(eta - post.mu) - qjj * (eta(j) - post.mu(j));
            const double m = post.mu(j) - shift / qjj;
            const double s_j = 1.0 / std::sqrt(qjj);
            switch (post.constraints[static_cast<std::size_t>(j)]) {
            case SignConstraint::Negative: eta(j) = sample_truncated_normal(m, s_j, -inf, 0.0, rng); break;
            case SignConstraint::Positive: eta(j) = sample_truncated_normal(m, s_j, 0.0, inf, rng); break;
            default: eta(j) = m + s_j * std_normal(rng); break;
            }
        }
        if (s > opts.burn_in && (s - opts.burn_in) % opts.thin == 0) out.row(static_cast<Eigen::Index>(kept++)) = eta.transpose();
    }
    return out;
}

} // namespace lrmbayes
