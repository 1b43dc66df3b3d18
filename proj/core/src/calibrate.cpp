#include "lrmbayes/calibrate.hpp"

#include "linalg.hpp"
#include "parallel.hpp"
#include "lrmbayes/error.hpp"
#include "lrmbayes/special.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>

namespace lrmbayes {

using json = nlohmann::json;

void CalibrationConfig::validate() const
{
    if (bootstrap < 2) throw ConfigError("calibration needs at least 2 bootstrap resamples");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("miscoverage delta must lie in (0, 1)");
    if (!(beta_min > 0.0 && beta_min < beta_max) || !std::isfinite(beta_max))
        throw ConfigError("beta search range must satisfy 0 < beta_min < beta_max < inf");
    if (grid_points < 2) throw ConfigError("beta grid needs at least 2 points");
    if (!(bisection_tolerance > 0.0)) throw ConfigError("bisection tolerance must be positive");
}

// ---- bootstrap fits

CoverageEvaluator::CoverageEvaluator(const CalibrationProblem& problem, const CalibrationConfig& cfg)
    : prior_(problem.prior)
{
    cfg.validate();
    if (problem.units == 0) throw ConfigError("calibration problem has no units");
    if (!problem.build) throw ConfigError("calibration problem has no loss builder");
    prior_.validate();
    prior_precision_ = detail::spd_inverse(detail::robust_cholesky(prior_.Sigma, "prior covariance"));
    prior_shift_ = prior_precision_ * prior_.mu;
    chi2_ = chi2_quantile(static_cast<unsigned>(prior_.mu.size()), 1.0 - cfg.delta);

    std::vector<std::size_t> all(problem.units);
    std::iota(all.begin(), all.end(), std::size_t{0});
    try {
        theta_hat_ = min_lrm_estimate(problem.build(all));
    } catch (const NumericalError& e) {
        degenerate_ = true;
        reason_ = e.what();
    }

    std::vector<std::optional<QuadraticLoss>> fits(cfg.bootstrap);
    detail::parallel_for(cfg.bootstrap, cfg.threads, [&](std::size_t b) {
        Rng rng = make_rng(cfg.rng.child(b));
        std::uniform_int_distribution<std::size_t> pick(0, problem.units - 1);
        std::vector<std::size_t> idx(problem.units);
        for (auto& i : idx) i = pick(rng);
        std::sort(idx.begin(), idx.end());
        try {
            auto loss = problem.build(idx);
            (void)min_lrm_estimate(loss); // rank check
            fits[b] = std::move(loss);
        } catch (const NumericalError&) {
        }
    });
    for (auto& f : fits) {
        if (f)
            losses_.push_back(std::move(*f));
        else
            ++skipped_;
    }
    if (losses_.empty() && !degenerate_) {
        degenerate_ = true;
        reason_ = "every bootstrap resample produced a singular loss";
    }
}

double CoverageEvaluator::coverage(double beta) const
{
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    if (losses_.empty() || theta_hat_.size() == 0) return 0.0;
    std::size_t hit = 0;
    for (const auto& l : losses_) {
        const double w = 2.0 * beta * static_cast<double>(l.n);
        const Eigen::MatrixXd P = prior_precision_ + w * l.Lambda;
        const auto llt = detail::robust_cholesky(P, "posterior precision");
        const Eigen::VectorXd mu = llt.solve(prior_shift_ + w * l.nu);
        const Eigen::VectorXd d = theta_hat_ - mu;
        if (d.dot(P * d) <= chi2_) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(losses_.size());
}

double coverage_at_beta(double beta, const CalibrationProblem& problem, const CalibrationConfig& cfg)
{
    return CoverageEvaluator(problem, cfg).coverage(beta);
}

// ---- search

CalibrationResult calibrate_beta(const CalibrationProblem& problem, const CalibrationConfig& cfg)
{
    const CoverageEvaluator eval(problem, cfg);
    CalibrationResult r;
    r.bootstrap = cfg.bootstrap;
    r.skipped = eval.skipped();
    r.theta_hat = eval.theta_hat();
    r.target_coverage = 1.0 - cfg.delta;
    const double target = r.target_coverage;

    if (eval.degenerate()) {
        r.beta = cfg.beta_min;
        r.coverage = eval.coverage(cfg.beta_min);
        r.curve.push_back({r.beta, r.coverage});
        r.flag = "degenerate: " + eval.degenerate_reason();
        return r;
    }

    const double l0 = std::log(cfg.beta_min), l1 = std::log(cfg.beta_max);
    const std::size_t G = cfg.grid_points;
    std::vector<CoveragePoint> grid(G);
    for (std::size_t i = 0; i < G; ++i) {
        const double b = i + 1 == G ? cfg.beta_max : std::exp(l0 + (l1 - l0) * static_cast<double>(i) / (G - 1.0));
        grid[i] = {b, eval.coverage(b)};
    }
    r.curve = grid;

    std::optional<std::size_t> top;
    for (std::size_t i = G; i-- > 0;) {
        if (grid[i].coverage >= target) {
            top = i;
            break;
        }
    }
    if (!top) {
        r.beta = grid.front().beta;
        r.coverage = grid.front().coverage;
        r.flag = "bracket not found: coverage below target across the grid";
    } else if (*top + 1 == G) {
        r.beta = grid.back().beta;
        r.coverage = grid.back().coverage;
        r.flag = "bracket not found: coverage above target across the grid";
    } else {
        r.bracket_found = true;
        double lo = grid[*top].beta, hi = grid[*top + 1].beta;
        double c_lo = grid[*top].coverage;
        for (std::size_t it = 0; it < cfg.max_bisection && hi / lo >= 1.0 + cfg.bisection_tolerance; ++it) {
            const double mid = std::sqrt(lo * hi);
            const double c = eval.coverage(mid);
            r.curve.push_back({mid, c});
            if (c >= target) {
                lo = mid;
                c_lo = c;
            } else {
                hi = mid;
            }
        }
        r.beta = lo;
        r.coverage = c_lo;
        const double tol = std::max(0.02, 2.0 / std::sqrt(static_cast<double>(cfg.bootstrap)));
        if (std::abs(c_lo - target) > tol) r.flag = "coverage step exceeds tolerance at the bracket";
    }
    std::sort(r.curve.begin(), r.curve.end(), [](const auto& a, const auto& b) { return a.beta < b.beta; });
    return r;
}

void CalibrationResult::write_csv(std::ostream& os) const
{
    const auto old = os.precision(17);
    os << "beta,coverage\r\n";
    for (const auto& pt : curve) os << pt.beta << ',' << pt.coverage << "\r\n";
    os.precision(old);
}

std::string CalibrationResult::to_json() const
{
    json j;
    j["beta"] = beta;
    j["coverage"] = coverage;
    j["target_coverage"] = target_coverage;
    j["bracket_found"] = bracket_found;
    j["flag"] = flag;
    j["bootstrap"] = bootstrap;
    j["skipped"] = skipped;
    j["theta_hat"] = std::vector<double>(theta_hat.data(), theta_hat.data() + theta_hat.size());
    return j.dump(2);
}

// ---- problem builders

SmoothedPmf PmfRecipe::fit(std::span<const StatePoint> samples) const
{
    std::optional<BasePmf> base;
    if (alpha > 0.0)
        base = finite_domain ? BasePmf::uniform_finite(*finite_domain) : BasePmf::count_mixture_for(samples, epsilon);
    return smooth(fit_empirical(samples), alpha, std::move(base));
}

CalibrationProblem lrm_problem(const ExpFamilyModel& model, std::span<const StatePoint> samples,
                               const MatchingSet& matching, const PmfRecipe& recipe, const GaussianPrior& prior,
                               bool refit_pmf, bool poisson_weighted, AssemblyOptions assembly)
{
    if (samples.empty()) throw ConfigError("calibration needs data");
    auto data = std::make_shared<const std::vector<StatePoint>>(samples.begin(), samples.end());
    auto full = std::make_shared<const SmoothedPmf>(recipe.fit(*data));
    auto full_w = std::make_shared<const WeightFunction>(poisson_weighted ? poisson_weights(*data)
                                                                          : WeightFunction::constant());
    CalibrationProblem p;
    p.units = data->size();
    p.prior = prior;
    p.build = [&model, data, full, full_w, matching, recipe, refit_pmf, poisson_weighted,
               assembly](std::span<const std::size_t> units) {
        std::vector<StatePoint> sub;
        sub.reserve(units.size());
        for (auto u : units) sub.push_back((*data)[u]);
        if (!refit_pmf) return build_quadratic(model, sub, matching, *full, *full_w, assembly);
        const SmoothedPmf q = recipe.fit(sub);
        const WeightFunction w = poisson_weighted ? poisson_weights(sub) : WeightFunction::constant();
        return build_quadratic(model, sub, matching, q, w, assembly);
    };
    return p;
}

CalibrationProblem mrf_problem(const MrfModel& model, std::span<const StatePoint> lattices, double alpha,
                               MrfLossOptions loss_opts, const GaussianPrior& prior, bool refit_pmf)
{
    if (lattices.empty()) throw ConfigError("calibration needs data");
    auto data = std::make_shared<const std::vector<StatePoint>>(lattices.begin(), lattices.end());
    const std::size_t sites = model.geometry().sites();
    auto refs = std::make_shared<std::vector<SiteRef>>();
    refs->reserve(sites * data->size());
    for (std::size_t l = 0; l < data->size(); ++l)
        for (std::size_t s = 0; s < sites; ++s)
            refs->push_back({static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(s)});
    auto full = std::make_shared<const LocalConditionalTable>(
        fit_local_conditionals(*data, model.geometry(), model.states(), alpha));

    CalibrationProblem p;
    p.units = refs->size();
    p.prior = prior;
    p.build = [&model, data, refs, full, alpha, loss_opts, refit_pmf](std::span<const std::size_t> units) {
        std::vector<SiteRef> sel;
        sel.reserve(units.size());
        for (auto u : units) sel.push_back((*refs)[u]);
        if (!refit_pmf) return mrf_local_loss(model, *full, *data, sel, loss_opts);
        const auto table = fit_local_conditionals(*data, model.geometry(), model.states(), alpha, sel);
        return mrf_local_loss(model, table, *data, sel, loss_opts);
    };
    return p;
}

} // namespace lrmbayes
