#include "lrmbayes/lrm.hpp"

#include "linalg.hpp"
#include "parallel.hpp"
#include "lrmbayes/error.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace lrmbayes {

using nlohmann::json;

double QuadraticLoss::evaluate(const Eigen::VectorXd& eta) const
{
    return eta.dot(Lambda * eta) - 2.0 * eta.dot(nu) + c;
}

QuadraticLoss QuadraticLoss::zero(std::size_t p, std::size_t n)
{
    QuadraticLoss q;
    const auto ip = static_cast<Eigen::Index>(p);
    q.Lambda = Eigen::MatrixXd::Zero(ip, ip);
    q.nu = Eigen::VectorXd::Zero(ip);
    q.n = n;
    return q;
}

GaussianPrior GaussianPrior::isotropic(const Eigen::VectorXd& mean, double variance)
{
    GaussianPrior g;
    g.mu = mean;
    g.Sigma = variance * Eigen::MatrixXd::Identity(mean.size(), mean.size());
    g.validate();
    return g;
}

void GaussianPrior::validate() const
{
    if (Sigma.rows() != mu.size() || Sigma.cols() != mu.size()) throw ConfigError("prior mean and covariance sizes differ");
    if (!mu.allFinite() || !Sigma.allFinite()) throw ConfigError("prior has non-finite entries");
    if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, Sigma.cwiseAbs().maxCoeff()))
        throw ConfigError("prior covariance is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success) throw ConfigError("prior covariance is not positive definite");
}

bool GaussianPosterior::constrained() const
{
    return std::any_of(constraints.begin(), constraints.end(), [](SignConstraint c) { return c != SignConstraint::None; });
}

Eigen::VectorXd GaussianPosterior::sd() const
{
    return Sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
}

WeightFunction WeightFunction::poisson_marginals(std::vector<double> means)
{
    WeightFunction w;
    w.kind_ = Kind::PoissonMarginals;
    for (double m : means) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("Poisson weight means must be finite and >= 0");
        if (m == 0.0) w.degenerate_ = true;
    }
    w.means_ = std::move(means);
    return w;
}

double WeightFunction::log_weight(const StatePoint& x) const
{
    if (kind_ == Kind::Constant) return 0.0;
    if (x.size() != means_.size()) throw InvariantError("weight function dimension does not match the state");
    double lw = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double mu = means_[j];
        if (mu == 0.0) {
            // 0^0 = 1: weight one at x_j = 0 and zero elsewhere
            if (x[j] != 0) return -std::numeric_limits<double>::infinity();
            continue;
        }
        lw += -mu + static_cast<double>(x[j]) * std::log(mu) - log_factorial(x[j]);
    }
    return lw;
}

double WeightFunction::operator()(const StatePoint& x) const
{
    return std::exp(log_weight(x));
}

WeightFunction poisson_weights(std::span<const StatePoint> samples)
{
    if (samples.empty()) throw ConfigError("cannot derive weights from an empty sample");
    const std::size_t d = samples.front().size();
    std::vector<double> medians(d);
    std::vector<std::int64_t> col(samples.size());
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].size() != d) throw ConfigError("samples have inconsistent dimension");
            if (samples[i][j] < 0) throw ConfigError("Poisson weights need count-valued samples");
            col[i] = samples[i][j];
        }
        std::sort(col.begin(), col.end());
        const std::size_t m = col.size();
        medians[j] = m % 2 ? static_cast<double>(col[m / 2])
                           : 0.5 * (static_cast<double>(col[m / 2 - 1]) + static_cast<double>(col[m / 2]));
    }
    return WeightFunction::poisson_marginals(std::move(medians));
}

double lrm_divergence_exact(std::span<const double> q, std::span<const double> p, const DomainSpec& domain,
                            const MatchingSet& matching)
{
    const auto card = domain.cardinality();
    if (!card || *card > 100'000) throw ConfigError("exact divergence needs a finite domain of at most 1e5 states");
    if (q.size() != *card || p.size() != *card) throw ConfigError("PMF tables must cover every state of the domain");

    double total = 0.0;
    std::vector<Move> moves;
    for (std::uint64_t i = 0; i < *card; ++i) {
        if (q[i] <= 0.0) continue;
        if (p[i] <= 0.0) throw InvariantError("p has no mass where q is positive; divergence undefined");
        const StatePoint x = domain.state_at(i);
        matching.moves_into(x, moves);
        double inner = 0.0;
        for (const auto& m : moves) {
            const auto j = domain.index_of(apply(x, m));
            if (p[j] <= 0.0) throw InvariantError("p has no mass at a matched state; divergence undefined");
            if (q[j] <= 0.0) return std::numeric_limits<double>::infinity();
            const double diff = (std::log(p[j]) - std::log(p[i])) - (std::log(q[j]) - std::log(q[i]));
            inner += diff * diff;
        }
        total += q[i] * inner / static_cast<double>(moves.size());
    }
    return total;
}

double lrm_loss_direct(const ModelView& model, const Eigen::VectorXd& theta, std::span<const StatePoint> samples,
                       const MatchingSet& matching, const SmoothedPmf& qhat, const WeightFunction& w)
{
    if (samples.empty()) throw ConfigError("empty sample");
    if (model.per_sample() && model.size() != samples.size())
        throw ConfigError("per-sample models must match the sample count");
    double total = 0.0;
    std::size_t used = 0;
    std::vector<Move> moves;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& x = samples[i];
        const auto& mdl = model.at(i);
        const double wi = w(x);
        matching.moves_into(x, moves);
        const double f = wi / static_cast<double>(moves.size());
        for (const auto& m : moves) {
            const StatePoint xp = apply(x, m);
            const auto lr = log_ratio(qhat, xp, x);
            if (!lr) continue;
            ++used;
            const double r = model_log_ratio(mdl, theta, xp, x);
            total += f * (r * r - 2.0 * r * *lr);
        }
    }
    if (used == 0) throw DegenerateLossError("every log-ratio term was omitted; the loss is undefined");
    return total / static_cast<double>(samples.size());
}

namespace {

struct Partial {
    Eigen::MatrixXd L;
    Eigen::VectorXd v;
    double c = 0.0;
    std::size_t terms = 0;
    std::size_t omitted = 0;
};

void accumulate(Partial& acc, const Eigen::VectorXd& dt, double db, double lr, double f)
{
    acc.L.selfadjointView<Eigen::Lower>().rankUpdate(dt, f);
    acc.v.noalias() += (f * (lr - db)) * dt;
    acc.c += f * (db * db - 2.0 * db * lr);
    ++acc.terms;
}

QuadraticLoss finish(std::vector<Partial>& parts, std::size_t p, std::size_t n)
{
    QuadraticLoss out = QuadraticLoss::zero(p, n);
    for (auto& part : parts) { // chunk order, so the sum does not depend on scheduling
        out.Lambda += part.L;
        out.nu += part.v;
        out.c += part.c;
        out.terms += part.terms;
        out.omitted += part.omitted;
    }
    if (out.terms == 0) throw DegenerateLossError("every loss term was omitted or truncated; the loss is undefined");
    out.Lambda = out.Lambda.selfadjointView<Eigen::Lower>();
    const double inv_n = 1.0 / static_cast<double>(n);
    out.Lambda *= inv_n;
    out.nu *= inv_n;
    out.c *= inv_n;
    return out;
}

} // namespace

QuadraticLoss build_quadratic(const ModelView& model, std::span<const StatePoint> samples,
                              const MatchingSet& matching, const SmoothedPmf& qhat, const WeightFunction& w,
                              AssemblyOptions opts)
{
    if (samples.empty()) throw ConfigError("empty sample");
    if (model.per_sample() && model.size() != samples.size())
        throw ConfigError("per-sample models must match the sample count");
    const std::size_t p = model.dimension();
    const auto ip = static_cast<Eigen::Index>(p);
    const std::size_t chunk = std::max<std::size_t>(opts.chunk, 1);
    std::vector<Partial> parts((samples.size() + chunk - 1) / chunk);

    detail::parallel_for(parts.size(), opts.threads, [&](std::size_t c) {
        const std::size_t begin = c * chunk;
        const std::size_t end = std::min(samples.size(), begin + chunk);
        Partial acc;
        acc.L = Eigen::MatrixXd::Zero(ip, ip);
        acc.v = Eigen::VectorXd::Zero(ip);
        std::vector<Move> moves;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& x = samples[i];
            const auto& mdl = model.at(i);
            matching.moves_into(x, moves);
            const double f = w(x) / static_cast<double>(moves.size());
            for (const auto& m : moves) {
                const auto lr = log_ratio(qhat, apply(x, m), x);
                if (!lr) {
                    ++acc.omitted;
                    continue;
                }
                accumulate(acc, mdl.statistic_delta(x, m), mdl.base_delta(x, m), *lr, f);
            }
        }
        parts[c] = std::move(acc);
    });
    return finish(parts, p, samples.size());
}

GaussianPosterior conjugate_update(const GaussianPrior& prior, const QuadraticLoss& loss, double beta,
                                   std::vector<SignConstraint> constraints)
{
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("learning rate beta must be positive and finite");
    const auto p = prior.mu.size();
    if (loss.Lambda.rows() != p || loss.nu.size() != p) throw ConfigError("prior and loss dimensions differ");
    if (!constraints.empty() && constraints.size() != static_cast<std::size_t>(p))
        throw ConfigError("constraint list must match the parameter dimension");

    // Prior precision from the Cholesky factor: Sigma^-1 = L^-T L^-1.
    const auto prior_llt = detail::robust_cholesky(prior.Sigma, "prior covariance");
    const Eigen::MatrixXd prior_prec = detail::spd_inverse(prior_llt);

    const double scale = 2.0 * beta * static_cast<double>(loss.n);
    const Eigen::MatrixXd precision = prior_prec + scale * loss.Lambda;
    const auto llt = detail::robust_cholesky(0.5 * (precision + precision.transpose()), "posterior precision");

    GaussianPosterior post;
    post.Sigma = detail::spd_inverse(llt);
    post.mu = llt.solve(prior_prec * prior.mu + scale * loss.nu);
    post.constraints = std::move(constraints);
    if (!post.mu.allFinite()) throw NumericalError("posterior mean is not finite");
    return post;
}

Eigen::VectorXd min_lrm_estimate(const QuadraticLoss& loss)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(loss.Lambda);
    const auto& ev = es.eigenvalues();
    const double hi = ev.cwiseAbs().maxCoeff();
    if (!(hi > 0.0) || ev.minCoeff() <= 1e-12 * hi)
        throw NumericalError("Lambda is singular (rank deficient); the minimiser is not unique. "
                             "Consider a larger matching set or more data.");
    Eigen::LLT<Eigen::MatrixXd> llt(loss.Lambda);
    if (llt.info() != Eigen::Success) throw NumericalError("Lambda is not positive definite");
    return llt.solve(loss.nu);
}

namespace {

struct MrfTerm {
    std::uint32_t unit;
    std::int64_t s;
};

QuadraticLoss mrf_loss_impl(const MrfModel& model, const LocalConditionalTable& table,
                            std::span<const StatePoint> lattices, std::size_t unit_count,
                            const std::function<SiteRef(std::size_t)>& unit_at, MrfLossOptions opts)
{
    if (table.states() != model.states()) throw ConfigError("conditional table and model disagree on |S|");
    if (unit_count == 0) throw ConfigError("no lattice sites to fit");
    if (!(opts.truncation_quantile >= 0.0 && opts.truncation_quantile < 1.0))
        throw ConfigError("truncation quantile must lie in [0, 1)");
    const auto& geom = model.geometry();
    for (const auto& lat : lattices) {
        if (lat.size() != geom.sites()) throw ConfigError("lattice does not match the model geometry");
    }
    const std::int64_t S = model.states();

    double threshold = -1.0;
    if (opts.truncation_quantile > 0.0) {
        std::vector<double> cond;
        cond.reserve(unit_count * static_cast<std::size_t>(S - 1));
        for (std::size_t u = 0; u < unit_count; ++u) {
            const auto ref = unit_at(u);
            const auto& lat = lattices[ref.lattice];
            const auto key = neighbourhood_key(lat, geom, ref.site, S);
            for (std::int64_t s = 0; s < S; ++s)
                if (s != lat[ref.site]) cond.push_back(table.conditional(key, s));
        }
        const auto k = static_cast<std::size_t>(opts.truncation_quantile * static_cast<double>(cond.size() - 1));
        std::nth_element(cond.begin(), cond.begin() + static_cast<std::ptrdiff_t>(k), cond.end());
        threshold = cond[k];
    }

    const auto p = static_cast<Eigen::Index>(model.dimension());
    Partial acc;
    acc.L = Eigen::MatrixXd::Zero(p, p);
    acc.v = Eigen::VectorXd::Zero(p);
    const double f = 1.0 / static_cast<double>(S);
    Eigen::VectorXd dt(p);
    for (std::size_t u = 0; u < unit_count; ++u) {
        const auto ref = unit_at(u);
        const auto& lat = lattices[ref.lattice];
        const auto xk = lat[ref.site];
        const auto key = neighbourhood_key(lat, geom, ref.site, S);
        for (std::int64_t s = 0; s < S; ++s) {
            if (s == xk) continue;
            if (threshold >= 0.0 && table.conditional(key, s) < threshold) {
                ++acc.omitted;
                continue;
            }
            const auto lr = table.log_ratio(key, s, xk);
            if (!lr) {
                ++acc.omitted;
                continue;
            }
            double ds = 0.0, dp = 0.0;
            model.site_change(lat, ref.site, s, ds, dp);
            if (model.has_site_term())
                dt << ds, dp;
            else
                dt << dp;
            accumulate(acc, dt, 0.0, *lr, f);
        }
    }
    std::vector<Partial> parts;
    parts.push_back(std::move(acc));
    return finish(parts, model.dimension(), unit_count);
}

} // namespace

QuadraticLoss mrf_local_loss(const MrfModel& model, const LocalConditionalTable& table,
                             std::span<const StatePoint> lattices, MrfLossOptions opts)
{
    const std::size_t sites = model.geometry().sites();
    return mrf_loss_impl(
        model, table, lattices, sites * lattices.size(),
        [sites](std::size_t u) {
            return SiteRef{static_cast<std::uint32_t>(u / sites), static_cast<std::uint32_t>(u % sites)};
        },
        opts);
}

QuadraticLoss mrf_local_loss(const MrfModel& model, const LocalConditionalTable& table,
                             std::span<const StatePoint> lattices, std::span<const SiteRef> units,
                             MrfLossOptions opts)
{
    return mrf_loss_impl(model, table, lattices, units.size(), [units](std::size_t u) { return units[u]; }, opts);
}

// ---- JSON

namespace {

json matrix_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index p)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != p) throw ConfigError("matrix has the wrong row count");
    Eigen::MatrixXd m(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != p)
            throw ConfigError("matrix has the wrong column count");
        for (Eigen::Index k = 0; k < p; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from(const json& j, Eigen::Index p)
{
    const auto v = j.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != p) throw ConfigError("vector has the wrong length");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), p);
}

const char* constraint_name(SignConstraint c)
{
    switch (c) {
    case SignConstraint::Negative: return "negative";
    case SignConstraint::Positive: return "positive";
    default: return "none";
    }
}

} // namespace

std::string to_json(const QuadraticLoss& loss)
{
    json j;
    j["p"] = loss.p();
    j["n"] = loss.n;
    j["Lambda"] = matrix_json(loss.Lambda);
    j["nu"] = vector_json(loss.nu);
    j["c"] = loss.c;
    return j.dump(2);
}

std::string to_json(const GaussianPosterior& post)
{
    json j;
    j["p"] = post.p();
    j["mu"] = vector_json(post.mu);
    j["Sigma"] = matrix_json(post.Sigma);
    json c = json::array();
    for (auto s : post.constraints) c.push_back(constraint_name(s));
    j["constraints"] = c;
    return j.dump(2);
}

QuadraticLoss quadratic_loss_from_json(const std::string& text)
{
    try {
        const auto j = json::parse(text);
        const auto p = j.at("p").get<Eigen::Index>();
        QuadraticLoss q;
        q.n = j.at("n").get<std::size_t>();
        q.Lambda = matrix_from(j.at("Lambda"), p);
        q.nu = vector_from(j.at("nu"), p);
        q.c = j.at("c").get<double>();
        return q;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed quadratic-loss JSON: ") + e.what());
    }
}

GaussianPosterior gaussian_posterior_from_json(const std::string& text)
{
    try {
        const auto j = json::parse(text);
        const auto p = j.at("p").get<Eigen::Index>();
        GaussianPosterior g;
        g.mu = vector_from(j.at("mu"), p);
        g.Sigma = matrix_from(j.at("Sigma"), p);
        if (j.contains("constraints")) {
            for (const auto& c : j.at("constraints")) {
                const auto s = c.get<std::string>();
                if (s == "negative")
                    g.constraints.push_back(SignConstraint::Negative);
                else if (s == "positive")
                    g.constraints.push_back(SignConstraint::Positive);
                else if (s == "none")
                    g.constraints.push_back(SignConstraint::None);
                else
                    throw ConfigError("unknown constraint '" + s + "'");
            }
        }
        return g;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed posterior JSON: ") + e.what());
    }
}

} // namespace lrmbayes
