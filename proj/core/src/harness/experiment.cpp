#include "lrmbayes/harness/experiment.hpp"

#include "lrmbayes/baselines.hpp"
#include "lrmbayes/error.hpp"
#include "lrmbayes/models.hpp"
#include "lrmbayes/posterior.hpp"
#include "lrmbayes/samplers.hpp"
#include "lrmbayes/special.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

namespace lrmbayes::harness {

using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string offsets_label(const std::vector<std::int64_t>& offsets)
{
    std::string s = "M={";
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (i) s += ',';
        s += (offsets[i] > 0 ? "+" : "") + std::to_string(offsets[i]);
    }
    return s + "}";
}

std::string num_label(const char* key, double v)
{
    std::ostringstream o;
    o << key << '=' << v;
    return o.str();
}

std::vector<StatePoint> as_points(const std::vector<std::int64_t>& xs)
{
    std::vector<StatePoint> out;
    out.reserve(xs.size());
    for (auto x : xs) out.push_back({x});
    return out;
}

CalibrationConfig calib_config(const ExperimentConfig& cfg, std::uint64_t stream)
{
    CalibrationConfig c;
    c.bootstrap = cfg.lrm.bootstrap;
    c.delta = cfg.lrm.delta;
    c.threads = cfg.threads;
    c.rng = cfg.rng(stream);
    return c;
}

MethodSummary from_gaussian(std::string method, std::string label, std::vector<std::string> names,
                            const GaussianPosterior& post, double beta)
{
    MethodSummary s;
    s.method = std::move(method);
    s.label = std::move(label);
    s.names = std::move(names);
    s.mean = post.mu;
    s.sd = post.sd();
    s.cov = post.Sigma;
    s.beta = beta;
    return s;
}

MethodSummary from_draws(std::string method, std::string label, std::vector<std::string> names,
                         const Eigen::MatrixXd& draws, double beta, std::string space)
{
    MethodSummary s;
    s.method = std::move(method);
    s.label = std::move(label);
    s.names = std::move(names);
    s.mean = draws.colwise().mean().transpose();
    const Eigen::MatrixXd c = draws.rowwise() - s.mean.transpose();
    s.cov = c.transpose() * c / std::max<double>(1.0, static_cast<double>(draws.rows()) - 1.0);
    s.sd = s.cov.diagonal().cwiseSqrt();
    s.beta = beta;
    s.space = std::move(space);
    return s;
}

/// Shared state of one experiment run.
struct Run {
    const ExperimentConfig& cfg;
    OutputDir& out;
    ResultBundle& bundle;
    GaussianPrior prior;
    std::vector<std::tuple<std::string, std::string, double>> seconds; // method, label, wall clock
    std::map<std::string, std::vector<double>> per_method_seconds;
    std::size_t data_size = 0;

    bool wants(Method m) const
    {
        return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
    }

    /// Runs fn, timing it and recording either its summary or its failure.
    template <class Fn>
    std::optional<MethodSummary> attempt(const std::string& method, const std::string& label, Fn&& fn)
    {
        ++bundle.method_runs;
        const auto t0 = Clock::now();
        try {
            MethodSummary s = fn();
            const double t = since(t0);
            seconds.emplace_back(method, label, t);
            per_method_seconds[method].push_back(t);
            bundle.summaries.push_back(s);
            return s;
        } catch (const std::exception& e) {
            const double t = since(t0);
            seconds.emplace_back(method, label, t);
            bundle.failures.push_back(method + (label.empty() ? "" : " [" + label + "]") + ": " + e.what());
            MethodSummary s;
            s.method = method;
            s.label = label;
            s.status = e.what();
            bundle.summaries.push_back(s);
            return std::nullopt;
        }
    }

    void diag(const std::string& method, const std::string& label, const std::string& name, double v)
    {
        bundle.diagnostics.push_back({method, label, name, v});
    }

    void chain_diagnostics(const std::string& method, const std::string& label, const ChainSet& chains)
    {
        for (std::size_t c = 0; c < chains.acceptance.size(); ++c)
            diag(method, label, "acceptance_chain" + std::to_string(c), chains.acceptance[c]);
        if (chains.chain_count() >= 2 && chains.iterations() - chains.burn_in >= 10) {
            const auto gr = gelman_rubin(chains);
            for (std::size_t j = 0; j < gr.rhat.size(); ++j)
                diag(method, label, "rhat_" + chains.names[j], gr.rhat[j] ? *gr.rhat[j] : std::nan(""));
        }
    }

    void calibration_diagnostics(const std::string& method, const std::string& label, const CalibrationResult& cal)
    {
        diag(method, label, "beta", cal.beta);
        diag(method, label, "coverage", cal.coverage);
        diag(method, label, "bracket_found", cal.bracket_found ? 1.0 : 0.0);
        diag(method, label, "skipped_resamples", static_cast<double>(cal.skipped));
    }
};

// ---- fitting helpers

struct LrmFit {
    GaussianPosterior post;
    double beta = 1.0;
    std::optional<CalibrationResult> cal;
    QuadraticLoss loss;
};

LrmFit lrm_fit(const Run& run, const ExpFamilyModel& model, const std::vector<StatePoint>& samples,
               const DomainSpec& domain, const std::vector<std::int64_t>& offsets, double alpha, BetaMode mode,
               bool weighted, std::uint64_t stream, std::vector<SignConstraint> constraints = {})
{
    const auto& cfg = run.cfg;
    const auto M = build_offset_matching_set(offsets, domain);
    const PmfRecipe recipe{alpha, cfg.lrm.epsilon, std::nullopt};
    const WeightFunction w = weighted ? poisson_weights(samples) : WeightFunction::constant();
    AssemblyOptions ao;
    ao.threads = cfg.threads;
    LrmFit f;
    f.loss = build_quadratic(model, samples, M, recipe.fit(samples), w, ao);
    f.beta = cfg.lrm.beta;
    if (mode == BetaMode::Calibrate) {
        f.cal = calibrate_beta(lrm_problem(model, samples, M, recipe, run.prior, true, weighted, ao),
                               calib_config(cfg, stream));
        f.beta = f.cal->beta;
    }
    f.post = conjugate_update(run.prior, f.loss, f.beta, std::move(constraints));
    return f;
}

using LossMaker = std::function<std::shared_ptr<const EtaLoss>(std::span<const std::size_t>)>;

/// beta for a baseline loss by bootstrap coverage of its Laplace approximation.
CalibrationResult calibrate_laplace(const LossMaker& make, std::size_t units, const GaussianPrior& prior,
                                    const CalibrationConfig& cc)
{
    const auto full = make({});
    const Eigen::VectorXd start = minimise_loss(*full, prior.mu).mode;
    CalibrationProblem p;
    p.units = units;
    p.prior = prior;
    p.build = [make, start](std::span<const std::size_t> u) {
        const auto l = make(u);
        return minimise_loss(*l, start).quadratic(l->n());
    };
    return calibrate_beta(p, cc);
}

/// Laplace-based posterior SDs of a baseline loss at a given beta.
Eigen::VectorXd laplace_sd(const LaplaceFit& fit, const EtaLoss& loss, const GaussianPrior& prior, double beta)
{
    const Eigen::MatrixXd prec =
        prior.Sigma.inverse() + beta * static_cast<double>(loss.n()) * fit.hessian;
    return prec.inverse().diagonal().cwiseSqrt();
}

/// Random walk in whitened coordinates eta = mode + L z, with L L^T the Laplace posterior
/// covariance, so strongly correlated posteriors still mix. A fixed proposal_scale switches
/// to a plain diagonal walk in eta.
ChainSet run_chains(const Run& run, const std::shared_ptr<const EtaLoss>& loss, LossKind kind, double beta,
                    const std::vector<std::string>& names, const RngSpec& spec)
{
    const auto& m = run.cfg.mcmc;
    const auto fit = minimise_loss(*loss, run.prior.mu);
    const auto p = fit.mode.size();
    const LossTarget target(kind, loss, run.prior, beta, spec.child(1'000'000));
    RwmhOptions o;
    o.iterations = m.draws + m.burn_in;
    o.burn_in = m.burn_in;
    o.chains = m.chains;
    o.threads = run.cfg.threads;
    o.init_spread = m.chains > 1 ? 2.0 : 0.0;
    o.names = names;
    if (m.proposal_scale > 0.0)
        return rwmh(target.function(), fit.mode, Eigen::VectorXd::Constant(p, m.proposal_scale), o, spec);

    const Eigen::MatrixXd prec = run.prior.Sigma.inverse() + beta * static_cast<double>(loss->n()) * fit.hessian;
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(prec.inverse()).matrixL();
    const Eigen::VectorXd mode = fit.mode;
    const auto f = target.function();
    const LogTarget whitened = [f, L, mode](const Eigen::VectorXd& z) { return f(mode + L * z); };
    ChainSet c = rwmh(whitened, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Constant(p, 2.38 / std::sqrt(double(p))), o, spec);
    for (auto& chain : c.chains) chain = ((L * chain.transpose()).colwise() + mode).transpose();
    return c;
}

MethodSummary chain_summary(const std::string& method, const std::string& label, const ChainSet& c, double beta)
{
    MethodSummary s;
    s.method = method;
    s.label = label;
    s.names = c.names;
    s.mean = c.mean();
    s.sd = c.sd();
    s.cov = c.covariance();
    s.beta = beta;
    return s;
}

std::string chains_csv(const ChainSet& c)
{
    std::ostringstream o;
    c.write_csv(o);
    return o.str();
}

// ---- CMP data

std::vector<StatePoint> cmp_samples(const ExperimentConfig& cfg, std::size_t n, std::uint64_t stream)
{
    Rng rng = make_rng(cfg.rng(stream));
    return as_points(sample_cmp_rejection(cfg.model.theta[0], cfg.model.theta[1], n, rng));
}

std::vector<StatePoint> univariate_data(Run& run)
{
    auto d = load_or_simulate(run.cfg);
    if (d.summary.columns != 1) throw ConfigError("univariate CMP data must have exactly one column");
    return d.samples;
}

const std::vector<std::string> kCmpNames{"log_theta1", "theta2"};

void fit_cmp_methods(Run& run, const std::vector<StatePoint>& data, const std::string& label)
{
    const auto& cfg = run.cfg;
    const CmpUnivariate model;
    if (run.wants(Method::Lrm)) {
        run.attempt("lrm", label, [&] {
            const auto f = lrm_fit(run, model, data, DomainSpec::counts(1), cfg.lrm.offsets, cfg.lrm.alpha,
                                   cfg.lrm.beta_mode, false, 11);
            if (f.cal) {
                run.calibration_diagnostics("lrm", label, *f.cal);
                std::ostringstream o;
                f.cal->write_csv(o);
                run.out.write("calibration_lrm.csv", o.str());
                run.out.write("calibration_lrm.svg", render_svg({coverage_plot(*f.cal, "LRM coverage")}, 1));
            }
            run.diag("lrm", label, "omitted_terms", static_cast<double>(f.loss.omitted));
            return from_gaussian("lrm", label, kCmpNames, f.post, f.beta);
        });
    }
    if (run.wants(Method::TruncBayes)) {
        run.attempt("trunc-bayes", label, [&] {
            std::int64_t mx = 0;
            for (const auto& x : data) mx = std::max(mx, x[0]);
            const auto loss = std::make_shared<TruncatedLikelihoodLoss>(data, std::max<std::int64_t>(99, 2 * mx));
            const auto chains = run_chains(run, loss, LossKind::TruncatedLikelihood, 1.0, kCmpNames, cfg.rng(12));
            run.chain_diagnostics("trunc-bayes", label, chains);
            run.out.write("chains_trunc-bayes.csv", chains_csv(chains));
            return chain_summary("trunc-bayes", label, chains, 1.0);
        });
    }
    if (run.wants(Method::Dfd)) {
        run.attempt("dfd", label, [&] {
            auto shared = std::make_shared<const std::vector<StatePoint>>(data);
            const auto domain = DomainSpec::counts(1);
            double beta = cfg.lrm.beta;
            if (cfg.lrm.beta_mode == BetaMode::Calibrate) {
                const LossMaker make = [&model, shared, domain](std::span<const std::size_t> u) {
                    return std::make_shared<const DfdLoss>(model, *shared, domain, u);
                };
                const auto cal = calibrate_laplace(make, data.size(), run.prior, calib_config(cfg, 13));
                run.calibration_diagnostics("dfd", label, cal);
                beta = cal.beta;
            }
            const auto loss = std::make_shared<const DfdLoss>(model, *shared, domain);
            const auto chains = run_chains(run, loss, LossKind::Dfd, beta, kCmpNames, cfg.rng(14));
            run.chain_diagnostics("dfd", label, chains);
            run.out.write("chains_dfd.csv", chains_csv(chains));
            return chain_summary("dfd", label, chains, beta);
        });
    }
}

SvgPlot ellipse_plot(const std::vector<MethodSummary>& rows, const std::string& title,
                     const std::optional<Eigen::Vector2d>& truth, const std::string& xlabel, const std::string& ylabel)
{
    SvgPlot plot(title, xlabel, ylabel);
    const double level = chi2_quantile(2, 0.95);
    std::size_t k = 0;
    for (const auto& s : rows) {
        if (!s.ok() || s.mean.size() < 2) continue;
        const auto e = ellipse_params(s.mean.head<2>(), s.cov.topLeftCorner<2, 2>(), level);
        plot.ellipse(e, palette(k++), s.method + (s.label.empty() ? "" : " " + s.label));
    }
    if (truth) plot.points({(*truth)(0)}, {(*truth)(1)}, "#000000", "truth");
    return plot;
}

// ---- experiments

void run_cmp1d(Run& run)
{
    const auto data = univariate_data(run);
    run.data_size = data.size();
    run.out.write("data.csv", dataset_csv(make_count_matrix(data)));
    fit_cmp_methods(run, data, "");
    std::optional<Eigen::Vector2d> truth;
    if (!run.cfg.data.path) truth = CmpUnivariate().eta_of_theta(Eigen::Vector2d(run.cfg.model.theta[0], run.cfg.model.theta[1]));
    run.out.write("ellipses.svg", render_svg({ellipse_plot(run.bundle.summaries, "95% credible regions", truth,
                                                          "log theta1", "theta2")},
                                             1));
}

void run_sensitivity(Run& run)
{
    const auto& cfg = run.cfg;
    const auto data = univariate_data(run);
    run.data_size = data.size();
    run.out.write("data.csv", dataset_csv(make_count_matrix(data)));
    const CmpUnivariate model;
    const std::vector<std::string> names{"theta1", "theta2"};

    auto variant = [&](const std::string& label, const std::vector<std::int64_t>& offsets, double alpha, BetaMode mode,
                       std::uint64_t stream) {
        return run.attempt("lrm", label, [&] {
            const auto f = lrm_fit(run, model, data, DomainSpec::counts(1), offsets, alpha, mode, false, stream);
            if (f.cal) run.calibration_diagnostics("lrm", label, *f.cal);
            Rng rng = make_rng(cfg.rng(stream + 500));
            const Eigen::MatrixXd th = posterior_on_theta(f.post, model).sample(4000, rng);
            return from_draws("lrm", label, names, th, f.beta, "theta");
        });
    };

    std::vector<MethodSummary> by_alpha, by_offsets, calibrated;
    std::uint64_t stream = 100;
    for (double a : cfg.lrm.alphas)
        if (auto s = variant(num_label("alpha", a), cfg.lrm.offsets, a, BetaMode::Fixed, stream++)) by_alpha.push_back(*s);
    for (const auto& o : cfg.lrm.offset_sets)
        if (auto s = variant(offsets_label(o), o, cfg.lrm.alpha, BetaMode::Fixed, stream++)) by_offsets.push_back(*s);
    if (cfg.lrm.beta_mode == BetaMode::Calibrate && !cfg.lrm.offset_sets.empty()) {
        std::vector<std::vector<std::int64_t>> pick{cfg.lrm.offset_sets.front()};
        if (cfg.lrm.offset_sets.size() > 1) pick.push_back(cfg.lrm.offset_sets.back());
        for (const auto& o : pick)
            if (auto s = variant(offsets_label(o) + " calibrated", o, cfg.lrm.alpha, BetaMode::Calibrate, stream++))
                calibrated.push_back(*s);
    }
    std::optional<Eigen::Vector2d> truth;
    if (!cfg.data.path) truth = Eigen::Vector2d(cfg.model.theta[0], cfg.model.theta[1]);
    std::vector<SvgPlot> panels;
    if (!by_alpha.empty()) panels.push_back(ellipse_plot(by_alpha, "alpha sweep, " + offsets_label(cfg.lrm.offsets), truth, "theta1", "theta2"));
    if (!by_offsets.empty()) panels.push_back(ellipse_plot(by_offsets, "matching-set sweep", truth, "theta1", "theta2"));
    if (!calibrated.empty()) panels.push_back(ellipse_plot(calibrated, "calibrated beta", truth, "theta1", "theta2"));
    if (!panels.empty()) run.out.write("sensitivity.svg", render_svg(panels, panels.size()));
}

void run_robust(Run& run)
{
    const auto& cfg = run.cfg;
    const auto data = load_or_simulate(cfg).samples;
    run.data_size = data.size();
    run.out.write("data.csv", dataset_csv(make_count_matrix(data)));
    const CmpUnivariate model;
    const Eigen::VectorXd truth = model.eta_of_theta(Eigen::Vector2d(cfg.model.theta[0], cfg.model.theta[1]));
    for (const bool weighted : {false, true}) {
        const std::string label = weighted ? "weighted" : "unweighted";
        run.attempt("lrm", label, [&] {
            const auto f = lrm_fit(run, model, data, DomainSpec::counts(1), cfg.lrm.offsets, cfg.lrm.alpha,
                                   cfg.lrm.beta_mode, weighted, weighted ? 21 : 22);
            if (f.cal) run.calibration_diagnostics("lrm", label, *f.cal);
            run.diag("lrm", label, "distance_to_truth", (f.post.mu - truth).norm());
            return from_gaussian("lrm", label, kCmpNames, f.post, f.beta);
        });
    }
    run.out.write("ellipses.svg",
                  render_svg({ellipse_plot(run.bundle.summaries, "contaminated CMP", Eigen::Vector2d(truth),
                                           "log theta1", "theta2")},
                             1));
}

void run_graphical(Run& run)
{
    const auto& cfg = run.cfg;
    const Dataset data = load_or_simulate(cfg);
    const std::size_t d = data.summary.columns;
    const CmpGraphical model(d);
    if (static_cast<Eigen::Index>(model.dimension()) != run.prior.mu.size())
        throw ConfigError("data have " + std::to_string(d) + " columns; the prior must have " +
                          std::to_string(model.dimension()) + " entries");
    run.data_size = data.samples.size();
    run.out.write("data.csv", dataset_csv(data));

    std::vector<std::string> names;
    for (std::size_t i = 0; i < d; ++i) names.push_back("eta_x" + std::to_string(i + 1));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) names.push_back("eta_x" + std::to_string(i + 1) + "x" + std::to_string(j + 1));
    for (std::size_t i = 0; i < d; ++i) names.push_back("eta_logfact" + std::to_string(i + 1));

    const auto& samples = data.samples;
    if (run.wants(Method::Lrm)) {
        run.attempt("lrm", "", [&]() -> MethodSummary {
            const auto f = lrm_fit(run, model, samples, DomainSpec::counts(d), cfg.lrm.offsets, cfg.lrm.alpha,
                                   cfg.lrm.beta_mode, false, 31, model.eta_constraints());
            if (f.cal) run.calibration_diagnostics("lrm", "", *f.cal);
            Rng rng = make_rng(cfg.rng(32));
            const Eigen::MatrixXd eta = sample_eta_posterior(f.post, 2000, rng);
            auto summary = from_draws("lrm", "", names, eta, f.beta, "eta");

            // posterior predictive: one synthetic draw per observation
            const std::size_t draws = std::min<std::size_t>(cfg.mcmc.predictive_draws, static_cast<std::size_t>(eta.rows()));
            const std::size_t per = (samples.size() + draws - 1) / draws;
            Eigen::MatrixXd theta(static_cast<Eigen::Index>(draws), eta.cols());
            const auto stride = static_cast<std::size_t>(eta.rows()) / draws;
            for (std::size_t k = 0; k < draws; ++k)
                theta.row(static_cast<Eigen::Index>(k)) =
                    model.theta_of_eta(eta.row(static_cast<Eigen::Index>(k * stride)).transpose()).transpose();
            Rng prng = make_rng(cfg.rng(33));
            auto pred = mh_posterior_predictive_cmp_graphical(model, theta, per, {}, prng);
            pred.resize(samples.size());

            std::int64_t mx = 0;
            for (const auto& x : samples) mx = std::max(mx, *std::max_element(x.begin(), x.end()));
            for (const auto& x : pred) mx = std::max(mx, *std::max_element(x.begin(), x.end()));
            CsvWriter w({"coordinate", "value", "observed", "predictive"});
            std::vector<SvgPlot> panels;
            const double n = static_cast<double>(samples.size());
            for (std::size_t j = 0; j < d; ++j) {
                std::vector<double> obs(static_cast<std::size_t>(mx) + 1, 0.0), prd(obs.size(), 0.0), edges;
                for (const auto& x : samples) obs[static_cast<std::size_t>(x[j])] += 1.0 / n;
                for (const auto& x : pred) prd[static_cast<std::size_t>(x[j])] += 1.0 / n;
                for (std::size_t v = 0; v < obs.size(); ++v) {
                    w.cell(j + 1).cell(static_cast<std::int64_t>(v)).cell(obs[v]).cell(prd[v]);
                    w.end_row();
                }
                for (std::size_t v = 0; v <= obs.size(); ++v) edges.push_back(static_cast<double>(v) - 0.5);
                SvgPlot p("x" + std::to_string(j + 1), "count", "frequency");
                p.histogram(edges, obs, "#7f7f7f", "data");
                p.histogram(edges, prd, palette(0), "LRM predictive", 0.45);
                panels.push_back(std::move(p));
            }
            run.out.write("predictive.csv", w.text());
            run.out.write("predictive.svg", render_svg(panels, 5, 280.0, 220.0));
            return summary;
        });
    }
    if (run.wants(Method::Dfd)) {
        run.attempt("dfd", "", [&] {
            auto shared = std::make_shared<const std::vector<StatePoint>>(samples);
            const auto domain = DomainSpec::counts(d);
            double beta = cfg.lrm.beta;
            if (cfg.lrm.beta_mode == BetaMode::Calibrate) {
                const LossMaker make = [&model, shared, domain](std::span<const std::size_t> u) {
                    return std::make_shared<const DfdLoss>(model, *shared, domain, u);
                };
                const auto cal = calibrate_laplace(make, samples.size(), run.prior, calib_config(cfg, 34));
                run.calibration_diagnostics("dfd", "", cal);
                beta = cal.beta;
            }
            const auto loss = std::make_shared<const DfdLoss>(model, *shared, domain);
            const auto chains = run_chains(run, loss, LossKind::Dfd, beta, names, cfg.rng(35));
            run.chain_diagnostics("dfd", "", chains);
            return chain_summary("dfd", "", chains, beta);
        });
    }
}

IngarchLrmOptions ingarch_options(const ExperimentConfig& cfg)
{
    IngarchLrmOptions lo;
    lo.offsets = cfg.lrm.offsets;
    lo.alpha = cfg.lrm.alpha;
    lo.epsilon = cfg.lrm.epsilon;
    return lo;
}

/// Units are t = 1..T-1 with phi held at its prior mean.
CalibrationProblem ingarch_problem(const ExperimentConfig& cfg, const std::vector<std::int64_t>& series,
                                   const GaussianPrior& prior)
{
    auto shared = std::make_shared<const std::vector<std::int64_t>>(series);
    CalibrationProblem p;
    p.units = series.size() - 1;
    p.prior = prior;
    p.build = [shared, lo = ingarch_options(cfg), phi0 = cfg.mcmc.phi_prior_mean](std::span<const std::size_t> u) {
        std::vector<std::size_t> ts(u.begin(), u.end());
        for (auto& t : ts) ++t;
        return IngarchLrm(*shared, lo, ts).quadratic(phi0);
    };
    return p;
}

void run_ingarch(Run& run)
{
    const auto& cfg = run.cfg;
    const std::vector<std::int64_t> series = load_or_simulate(cfg).series;
    run.data_size = series.size();
    run.out.write("data.csv", dataset_csv(make_count_series(series)));

    const IngarchLrm lrm(series, ingarch_options(cfg));
    const double phi0 = cfg.mcmc.phi_prior_mean;

    double beta = cfg.lrm.beta;
    if (cfg.lrm.beta_mode == BetaMode::Calibrate) {
        const auto cal = calibrate_beta(ingarch_problem(cfg, series, run.prior), calib_config(cfg, 41));
        run.calibration_diagnostics("lrm", "", cal);
        beta = cal.beta;
    }

    run.attempt("lrm", "phi=" + format_double(phi0) + " fixed", [&] {
        GaussianPosterior post = conjugate_update(run.prior, lrm.quadratic(phi0), beta);
        // eta3 = -theta3
        post.mu(2) = -post.mu(2);
        post.Sigma.row(2) *= -1.0;
        post.Sigma.col(2) *= -1.0;
        auto s = from_gaussian("lrm", "phi=" + format_double(phi0) + " fixed", {"theta1", "theta2", "theta3"}, post, beta);
        s.space = "theta";
        return s;
    });

    run.attempt("lrm", "metropolis-within-gibbs", [&] {
        IngarchMwgOptions o;
        o.prior = run.prior;
        o.beta = beta;
        o.phi_prior_mean = cfg.mcmc.phi_prior_mean;
        o.phi_prior_sd = cfg.mcmc.phi_prior_sd;
        o.phi_scale = cfg.mcmc.phi_scale;
        o.phi_updates = cfg.mcmc.phi_updates;
        o.phi_init = phi0;
        o.iterations = cfg.mcmc.draws + cfg.mcmc.burn_in;
        o.burn_in = cfg.mcmc.burn_in;
        o.chains = cfg.mcmc.chains;
        o.threads = cfg.threads;
        const auto chains = metropolis_within_gibbs_ingarch(lrm, o, cfg.rng(42));
        run.chain_diagnostics("lrm", "metropolis-within-gibbs", chains);
        run.out.write("chains.csv", chains_csv(chains));

        std::vector<SvgPlot> panels;
        for (std::size_t j = 0; j < chains.p(); ++j) {
            SvgPlot p("trace of " + chains.names[j], "iteration", chains.names[j]);
            for (std::size_t c = 0; c < chains.chain_count(); ++c) {
                const auto& m = chains.chains[c];
                const auto step = std::max<Eigen::Index>(1, m.rows() / 1000);
                std::vector<double> xs, ys;
                for (Eigen::Index i = 0; i < m.rows(); i += step) {
                    xs.push_back(static_cast<double>(i));
                    ys.push_back(m(i, static_cast<Eigen::Index>(j)));
                }
                p.line(xs, ys, palette(c), "chain " + std::to_string(c + 1));
            }
            p.vline(static_cast<double>(chains.burn_in), "#000000");
            panels.push_back(std::move(p));
        }
        run.out.write("traces.svg", render_svg(panels, 2));
        auto s = chain_summary("lrm", "metropolis-within-gibbs", chains, beta);
        s.space = "theta";
        return s;
    });
}

/// PL posterior scale used to size exchange proposals.
Eigen::VectorXd pl_scale(const Run& run, const MrfModel& model, const std::vector<StatePoint>& lat)
{
    const PseudoLikelihoodLoss pl(model, lat);
    const auto fit = minimise_loss(pl, run.prior.mu);
    return 2.38 / std::sqrt(static_cast<double>(fit.mode.size())) * laplace_sd(fit, pl, run.prior, 1.0);
}

MethodSummary mrf_fit(Run& run, Method method, const MrfModel& model, const std::vector<StatePoint>& lat,
                      const std::string& label, const std::vector<std::string>& names, std::uint64_t stream,
                      bool keep_chains)
{
    const auto& cfg = run.cfg;
    const std::size_t sites = model.geometry().sites();
    switch (method) {
    case Method::Lrm: {
        MrfLossOptions lo;
        lo.truncation_quantile = cfg.lrm.truncation_quantile;
        const auto table = fit_local_conditionals(lat, model.geometry(), model.states(), cfg.lrm.alpha);
        const auto loss = mrf_local_loss(model, table, lat, lo);
        double beta = cfg.lrm.beta;
        if (cfg.lrm.beta_mode == BetaMode::Calibrate) {
            const auto cal =
                calibrate_beta(mrf_problem(model, lat, cfg.lrm.alpha, lo, run.prior), calib_config(cfg, stream));
            run.calibration_diagnostics("lrm", label, cal);
            if (keep_chains) run.out.write("calibration_lrm.svg", render_svg({coverage_plot(cal, "LRM coverage")}, 1));
            beta = cal.beta;
        }
        return from_gaussian("lrm", label, names, conjugate_update(run.prior, loss, beta), beta);
    }
    case Method::Pl: {
        const auto loss = std::make_shared<const PseudoLikelihoodLoss>(model, lat);
        const auto chains = run_chains(run, loss, LossKind::PseudoLikelihood, 1.0, names, cfg.rng(stream + 1));
        run.chain_diagnostics("pl", label, chains);
        if (keep_chains) run.out.write("chains_pl.csv", chains_csv(chains));
        return chain_summary("pl", label, chains, 1.0);
    }
    case Method::Dfd: {
        auto shared = std::make_shared<const std::vector<StatePoint>>(lat);
        double beta = cfg.lrm.beta;
        if (cfg.lrm.beta_mode == BetaMode::Calibrate) {
            const LossMaker make = [&model, shared, sites](std::span<const std::size_t> u) {
                std::vector<SiteRef> refs;
                refs.reserve(u.size());
                for (auto k : u)
                    refs.push_back({static_cast<std::uint32_t>(k / sites), static_cast<std::uint32_t>(k % sites)});
                return std::make_shared<const DfdLoss>(model, *shared, refs);
            };
            const auto cal = calibrate_laplace(make, sites * lat.size(), run.prior, calib_config(cfg, stream + 2));
            run.calibration_diagnostics("dfd", label, cal);
            beta = cal.beta;
        }
        const auto loss = std::make_shared<const DfdLoss>(model, *shared);
        const auto chains = run_chains(run, loss, LossKind::Dfd, beta, names, cfg.rng(stream + 3));
        run.chain_diagnostics("dfd", label, chains);
        if (keep_chains) run.out.write("chains_dfd.csv", chains_csv(chains));
        return chain_summary("dfd", label, chains, beta);
    }
    case Method::Exchange: {
        ExchangeOptions o;
        o.iterations = cfg.mcmc.draws + cfg.mcmc.burn_in;
        o.burn_in = cfg.mcmc.burn_in;
        o.inner_sweeps = cfg.mcmc.inner_sweeps;
        o.chains = cfg.mcmc.chains;
        o.threads = cfg.threads;
        o.proposal_scale = cfg.mcmc.proposal_scale > 0.0
                               ? Eigen::VectorXd(Eigen::VectorXd::Constant(run.prior.mu.size(), cfg.mcmc.proposal_scale))
                               : pl_scale(run, model, lat);
        auto chains = exchange_mcmc_mrf(model, lat.front(), run.prior, o, cfg.rng(stream + 4));
        chains.names = names;
        run.chain_diagnostics("exchange", label, chains);
        if (keep_chains) run.out.write("chains_exchange.csv", chains_csv(chains));
        return chain_summary("exchange", label, chains, 1.0);
    }
    case Method::TruncBayes: break;
    }
    throw ConfigError("method not available for lattice models");
}

void run_ising(Run& run)
{
    const auto& cfg = run.cfg;
    const Eigen::Vector2d truth(cfg.model.theta[0], cfg.model.theta[1]);
    const std::vector<std::string> names{"theta1", "theta2"};
    CsvWriter trace({"grid", "sweep", "magnetisation"});
    std::vector<SvgPlot> trace_panels;
    SvgPlot mag("magnetisation traces", "sweep", "m");

    for (std::size_t gi = 0; gi < cfg.data.grids.size(); ++gi) {
        const std::size_t g = cfg.data.grids[gi];
        const LatticeGeometry geom{g, g};
        const auto model = MrfModel::ising(geom);
        for (std::size_t r = 0; r < cfg.data.repetitions; ++r) {
            Rng rng = make_rng(cfg.rng(10'000 * g + r));
            const auto sim = gibbs_lattice(model, truth, cfg.data.sweeps, rng);
            run.data_size = std::max(run.data_size, geom.sites());
            if (r == 0) {
                std::vector<double> xs, ys;
                for (std::size_t s = 0; s < sim.magnetisation.size(); ++s) {
                    trace.cell(g).cell(s + 1).cell(sim.magnetisation[s]);
                    trace.end_row();
                    xs.push_back(static_cast<double>(s + 1));
                    ys.push_back(sim.magnetisation[s]);
                }
                mag.line(xs, ys, palette(gi), std::to_string(g) + "^2");
            }
            const std::vector<StatePoint> lat{sim.lattice};
            const std::string label = "grid=" + std::to_string(g) + " rep=" + std::to_string(r);
            std::uint64_t stream = 100'000 * g + 10 * r;
            for (auto m : cfg.methods)
                run.attempt(to_string(m), label, [&] {
                    return mrf_fit(run, m, model, lat, label, names, stream += 100, false);
                });
        }
    }
    run.out.write("magnetisation.csv", trace.text());

    // mean and SD of posterior means per (method, grid)
    CsvWriter agg({"method", "grid", "parameter", "mean_of_means", "sd_of_means", "runs"});
    std::vector<SvgPlot> panels;
    for (std::size_t j = 0; j < 2; ++j) {
        SvgPlot p("posterior mean of " + names[j], "grid side", names[j]);
        p.hline(truth(static_cast<Eigen::Index>(j)), "#000000");
        std::size_t k = 0;
        for (auto m : cfg.methods) {
            std::vector<double> xs, ys, es;
            for (auto g : cfg.data.grids) {
                std::vector<double> v;
                const std::string prefix = "grid=" + std::to_string(g) + " ";
                for (const auto& s : run.bundle.summaries)
                    if (s.ok() && s.method == to_string(m) && s.label.rfind(prefix, 0) == 0)
                        v.push_back(s.mean(static_cast<Eigen::Index>(j)));
                if (v.empty()) continue;
                const double mu = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
                double ss = 0.0;
                for (double x : v) ss += (x - mu) * (x - mu);
                const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
                agg.cell(to_string(m)).cell(g).cell(names[j]).cell(mu).cell(sd).cell(v.size());
                agg.end_row();
                xs.push_back(static_cast<double>(g) + 2.0 * static_cast<double>(k));
                ys.push_back(mu);
                es.push_back(sd);
            }
            p.error_bars(xs, ys, es, palette(k), to_string(m));
            ++k;
        }
        panels.push_back(std::move(p));
    }
    panels.push_back(std::move(mag));
    run.out.write("ising_grid.csv", agg.text());
    run.out.write("ising.svg", render_svg(panels, 3));
}

void run_potts(Run& run)
{
    const auto& cfg = run.cfg;
    const Dataset data = load_or_simulate(cfg);
    if (data.states > cfg.model.states)
        throw ConfigError("raster holds state " + std::to_string(data.states - 1) + " but the model has " +
                          std::to_string(cfg.model.states) + " states");
    run.data_size = data.geometry.sites();
    run.out.write("data.csv", dataset_csv(data));
    const auto model = MrfModel::potts(data.geometry, cfg.model.states);
    const std::vector<StatePoint> lat{data.samples.front()};
    const std::vector<std::string> names{"theta"};
    std::uint64_t stream = 50;
    for (auto m : cfg.methods)
        run.attempt(to_string(m), "", [&] { return mrf_fit(run, m, model, lat, "", names, stream += 10, true); });

    SvgPlot p("posterior of the interaction", "theta", "density");
    std::size_t k = 0;
    for (const auto& s : run.bundle.summaries) {
        if (!s.ok()) continue;
        const double mu = s.mean(0), sd = std::max(s.sd(0), 1e-12);
        std::vector<double> xs, ys;
        for (int i = -200; i <= 200; ++i) {
            const double x = mu + 4.0 * sd * i / 200.0;
            xs.push_back(x);
            ys.push_back(std::exp(-0.5 * std::pow((x - mu) / sd, 2)) / (sd * std::sqrt(2.0 * 3.141592653589793)));
        }
        p.line(xs, ys, palette(k++), s.method);
    }
    run.out.write("potts.svg", render_svg({p}, 1));
}

void write_tables(Run& run)
{
    auto& b = run.bundle;
    run.out.write("summary.csv", summary_csv(b.summaries));
    if (std::any_of(b.summaries.begin(), b.summaries.end(), [](const auto& s) { return s.ok() && s.mean.size() >= 2; }))
        run.out.write("ellipses.csv", ellipse_csv(b.summaries));
    CsvWriter d({"method", "label", "name", "value"});
    for (const auto& x : b.diagnostics) {
        d.cell(x.method).cell(x.label).cell(x.name).cell(x.value);
        d.end_row();
    }
    run.out.write("diagnostics.csv", d.text());

    if (b.experiment != ExperimentId::Timing) {
        for (const auto& [method, ts] : run.per_method_seconds) {
            TimingRow t;
            t.method = method;
            t.n = run.data_size;
            t.repeats = ts.size();
            t.mean_seconds = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(ts.size());
            double ss = 0.0;
            for (double x : ts) ss += (x - t.mean_seconds) * (x - t.mean_seconds);
            t.sd_seconds = ts.size() > 1 ? std::sqrt(ss / static_cast<double>(ts.size() - 1)) : 0.0;
            b.timing.push_back(t);
        }
    }
    run.out.write("timing.csv", timing_csv(b.timing));
    CsvWriter w({"method", "label", "seconds"});
    for (const auto& [m, l, s] : run.seconds) {
        w.cell(m).cell(l).cell(s);
        w.end_row();
    }
    run.out.write("method_seconds.csv", w.text());
    run.out.write("config.json", run.cfg.to_json() + "\n");
}

} // namespace

// ---- public

std::string summary_csv(const std::vector<MethodSummary>& rows)
{
    CsvWriter w({"method", "label", "space", "parameter", "mean", "sd", "beta", "status"});
    for (const auto& s : rows) {
        if (!s.ok()) {
            w.cell(s.method).cell(s.label).cell(s.space).cell("").cell("").cell("").cell("").cell(s.status);
            w.end_row();
            continue;
        }
        for (Eigen::Index j = 0; j < s.mean.size(); ++j) {
            const auto name = static_cast<std::size_t>(j) < s.names.size() ? s.names[static_cast<std::size_t>(j)]
                                                                            : "p" + std::to_string(j + 1);
            w.cell(s.method).cell(s.label).cell(s.space).cell(name).cell(s.mean(j)).cell(s.sd(j)).cell(s.beta).cell(
                s.status);
            w.end_row();
        }
    }
    return w.text();
}

std::string ellipse_csv(const std::vector<MethodSummary>& rows)
{
    const double level = chi2_quantile(2, 0.95);
    CsvWriter w({"method", "label", "x", "y", "centre_x", "centre_y", "semi_major", "semi_minor", "angle_rad"});
    for (const auto& s : rows) {
        if (!s.ok() || s.mean.size() < 2) continue;
        const auto e = ellipse_params(s.mean.head<2>(), s.cov.topLeftCorner<2, 2>(), level);
        w.cell(s.method).cell(s.label).cell(s.names.size() > 0 ? s.names[0] : "p1").cell(s.names.size() > 1 ? s.names[1] : "p2");
        w.cell(e.cx).cell(e.cy).cell(e.semi_major).cell(e.semi_minor).cell(e.angle);
        w.end_row();
    }
    return w.text();
}

std::string timing_csv(const std::vector<TimingRow>& rows)
{
    CsvWriter w({"method", "n", "mean_seconds", "sd_seconds", "repeats", "timed_out"});
    for (const auto& t : rows) {
        w.cell(t.method).cell(t.n).cell(t.mean_seconds).cell(t.sd_seconds).cell(t.repeats).cell(t.timed_out ? "true" : "false");
        w.end_row();
    }
    return w.text();
}

SvgPlot coverage_plot(const CalibrationResult& cal, const std::string& title)
{
    SvgPlot p(title, "log10 beta", "bootstrap coverage");
    std::vector<double> xs, ys;
    for (const auto& pt : cal.curve) {
        xs.push_back(std::log10(pt.beta));
        ys.push_back(pt.coverage);
    }
    p.line(xs, ys, palette(0), "coverage");
    p.hline(cal.target_coverage, "#d62728");
    p.vline(std::log10(cal.beta), "#2ca02c");
    p.set_y_range(-0.02, 1.02);
    return p;
}

Dataset load_or_simulate(const ExperimentConfig& cfg)
{
    switch (cfg.experiment) {
    case ExperimentId::Cmp1d:
    case ExperimentId::Cmp1dSensitivity:
    case ExperimentId::Timing:
        if (cfg.data.path) return ingest_dataset(*cfg.data.path, DatasetKind::CountMatrix);
        return make_count_matrix(cmp_samples(cfg, cfg.data.n, 1));
    case ExperimentId::RobustCmp: {
        if (cfg.data.path) return ingest_dataset(*cfg.data.path, DatasetKind::CountMatrix);
        const auto n_bad =
            static_cast<std::size_t>(std::llround(cfg.data.contamination * static_cast<double>(cfg.data.n)));
        auto data = cmp_samples(cfg, cfg.data.n - n_bad, 1);
        Rng rng = make_rng(cfg.rng(2));
        std::poisson_distribution<std::int64_t> pois(cfg.data.contamination_mean);
        for (std::size_t i = 0; i < n_bad; ++i) data.push_back({pois(rng)});
        return make_count_matrix(std::move(data));
    }
    case ExperimentId::CmpGraphical:
        if (cfg.data.path) return ingest_dataset(*cfg.data.path, DatasetKind::CountMatrix);
        return synthetic_count_matrix(cfg.data.n, cfg.model.dimension, cfg.seed);
    case ExperimentId::Ingarch: {
        if (cfg.data.path) return ingest_dataset(*cfg.data.path, DatasetKind::CountSeries);
        Rng rng = make_rng(cfg.rng(1));
        const Eigen::Map<const Eigen::VectorXd> theta(cfg.model.theta.data(), 3);
        return make_count_series(simulate_ingarch(theta, cfg.model.ar_phi, cfg.data.n, rng, 1.0, 200));
    }
    case ExperimentId::Ising: {
        if (cfg.data.path) return ingest_dataset(*cfg.data.path, DatasetKind::LatticeRaster);
        const std::size_t g = cfg.data.grids.empty() ? cfg.data.grid : cfg.data.grids.front();
        const LatticeGeometry geom{g, g};
        Rng rng = make_rng(cfg.rng(10'000 * g));
        const Eigen::Vector2d truth(cfg.model.theta[0], cfg.model.theta[1]);
        return make_raster(gibbs_lattice(MrfModel::ising(geom), truth, cfg.data.sweeps, rng).lattice, geom);
    }
    case ExperimentId::Potts:
        if (cfg.data.path) return ingest_dataset(*cfg.data.path, DatasetKind::LatticeRaster);
        return synthetic_raster(cfg.data.grid, cfg.data.grid, cfg.model.states, cfg.seed);
    }
    throw ConfigError("unknown experiment");
}

CalibrationResult calibrate_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto data = load_or_simulate(cfg);
    const auto prior = cfg.gaussian_prior();
    const auto cc = calib_config(cfg, 11);
    AssemblyOptions ao;
    ao.threads = cfg.threads;
    const PmfRecipe recipe{cfg.lrm.alpha, cfg.lrm.epsilon, std::nullopt};
    switch (cfg.experiment) {
    case ExperimentId::CmpGraphical: {
        const std::size_t d = data.summary.columns;
        const CmpGraphical model(d);
        if (static_cast<Eigen::Index>(model.dimension()) != prior.mu.size())
            throw ConfigError("prior size does not match a " + std::to_string(d) + "-variable graphical model");
        const auto M = build_offset_matching_set(cfg.lrm.offsets, DomainSpec::counts(d));
        return calibrate_beta(lrm_problem(model, data.samples, M, recipe, prior, true, false, ao), cc);
    }
    case ExperimentId::Ingarch:
        return calibrate_beta(ingarch_problem(cfg, data.series, prior), cc);
    case ExperimentId::Ising:
    case ExperimentId::Potts: {
        if (data.states > (cfg.experiment == ExperimentId::Ising ? 2 : cfg.model.states))
            throw ConfigError("raster holds more states than the model");
        const auto model = cfg.experiment == ExperimentId::Ising ? MrfModel::ising(data.geometry)
                                                                 : MrfModel::potts(data.geometry, cfg.model.states);
        MrfLossOptions lo;
        lo.truncation_quantile = cfg.lrm.truncation_quantile;
        return calibrate_beta(mrf_problem(model, data.samples, cfg.lrm.alpha, lo, prior), cc);
    }
    default: {
        if (data.summary.columns != 1) throw ConfigError("univariate CMP data must have exactly one column");
        const CmpUnivariate model;
        const auto M = build_offset_matching_set(cfg.lrm.offsets, DomainSpec::counts(1));
        return calibrate_beta(lrm_problem(model, data.samples, M, recipe, prior, true, false, ao), cc);
    }
    }
}

Dataset posterior_predictive(const ExperimentConfig& cfg, std::size_t count)
{
    cfg.validate();
    if (count == 0) throw ConfigError("predictive sample count must be at least 1");
    const auto data = load_or_simulate(cfg);
    const auto prior = cfg.gaussian_prior();
    AssemblyOptions ao;
    ao.threads = cfg.threads;
    const PmfRecipe recipe{cfg.lrm.alpha, cfg.lrm.epsilon, std::nullopt};
    auto beta_for = [&](const ExpFamilyModel& model, const MatchingSet& M) {
        if (cfg.lrm.beta_mode == BetaMode::Fixed) return cfg.lrm.beta;
        return calibrate_beta(lrm_problem(model, data.samples, M, recipe, prior, true, false, ao), calib_config(cfg, 11))
            .beta;
    };
    switch (cfg.experiment) {
    case ExperimentId::Cmp1d:
    case ExperimentId::Cmp1dSensitivity:
    case ExperimentId::RobustCmp:
    case ExperimentId::Timing: {
        if (data.summary.columns != 1) throw ConfigError("univariate CMP data must have exactly one column");
        const CmpUnivariate model;
        const auto M = build_offset_matching_set(cfg.lrm.offsets, DomainSpec::counts(1));
        const auto loss = build_quadratic(model, data.samples, M, recipe.fit(data.samples), WeightFunction::constant(), ao);
        const auto post = conjugate_update(prior, loss, beta_for(model, M));
        Rng rng = make_rng(cfg.rng(61));
        std::vector<StatePoint> out;
        std::size_t rejected = 0;
        while (out.size() < count) {
            const Eigen::MatrixXd eta = sample_eta_posterior(post, count - out.size(), rng);
            for (Eigen::Index i = 0; i < eta.rows(); ++i) {
                const Eigen::VectorXd th = model.theta_of_eta(eta.row(i).transpose());
                if (!model.in_parameter_space(th) || th(1) <= 0.0) {
                    if (++rejected > 100 * count)
                        throw NumericalError("posterior puts almost no mass on the CMP parameter space");
                    continue;
                }
                out.push_back({sample_cmp_rejection(th(0), th(1), 1, rng).front()});
            }
        }
        return make_count_matrix(std::move(out));
    }
    case ExperimentId::CmpGraphical: {
        const std::size_t d = data.summary.columns;
        const CmpGraphical model(d);
        if (static_cast<Eigen::Index>(model.dimension()) != prior.mu.size())
            throw ConfigError("prior size does not match a " + std::to_string(d) + "-variable graphical model");
        const auto M = build_offset_matching_set(cfg.lrm.offsets, DomainSpec::counts(d));
        const auto loss = build_quadratic(model, data.samples, M, recipe.fit(data.samples), WeightFunction::constant(), ao);
        const auto post = conjugate_update(prior, loss, beta_for(model, M), model.eta_constraints());
        Rng rng = make_rng(cfg.rng(62));
        const std::size_t draws = std::min(count, std::max<std::size_t>(1, cfg.mcmc.predictive_draws));
        const Eigen::MatrixXd eta = sample_eta_posterior(post, draws, rng);
        Eigen::MatrixXd theta(eta.rows(), eta.cols());
        for (Eigen::Index i = 0; i < eta.rows(); ++i) theta.row(i) = model.theta_of_eta(eta.row(i).transpose()).transpose();
        auto rows = mh_posterior_predictive_cmp_graphical(model, theta, (count + draws - 1) / draws, {}, rng);
        rows.resize(count);
        return make_count_matrix(std::move(rows));
    }
    default:
        throw ConfigError("predict supports cmp1d, cmp1d-sensitivity, robust-cmp, timing and cmp-graphical");
    }
}

std::vector<TimingRow> benchmark_timing(const ExperimentConfig& config)
{
    config.validate();
    if (config.timing.repeats == 0) throw ConfigError("timing repeats must be at least 1");
    const CmpUnivariate model;
    const auto prior = config.gaussian_prior();
    std::vector<TimingRow> rows;
    std::map<Method, bool> dead;
    for (auto n : config.timing.n_sweep) {
        const auto data = cmp_samples(config, n, 5000 + n);
        for (auto m : config.methods) {
            TimingRow row;
            row.method = to_string(m);
            row.n = n;
            if (dead[m]) {
                row.timed_out = true;
                rows.push_back(row);
                continue;
            }
            std::vector<double> ts;
            for (std::size_t r = 0; r < config.timing.repeats; ++r) {
                const auto t0 = Clock::now();
                switch (m) {
                case Method::Lrm: {
                    const auto M = build_offset_matching_set(config.lrm.offsets, DomainSpec::counts(1));
                    const PmfRecipe recipe{config.lrm.alpha, config.lrm.epsilon, std::nullopt};
                    AssemblyOptions ao;
                    ao.threads = config.threads;
                    const auto loss = build_quadratic(model, data, M, recipe.fit(data), WeightFunction::constant(), ao);
                    double beta = config.lrm.beta;
                    if (config.lrm.beta_mode == BetaMode::Calibrate)
                        beta = calibrate_beta(lrm_problem(model, data, M, recipe, prior, true, false, ao),
                                              calib_config(config, 6000 + n))
                                   .beta;
                    (void)conjugate_update(prior, loss, beta);
                    break;
                }
                case Method::TruncBayes:
                case Method::Dfd: {
                    std::shared_ptr<const EtaLoss> loss;
                    double beta = 1.0;
                    if (m == Method::TruncBayes) {
                        std::int64_t mx = 0;
                        for (const auto& x : data) mx = std::max(mx, x[0]);
                        loss = std::make_shared<TruncatedLikelihoodLoss>(data, std::max<std::int64_t>(99, 2 * mx));
                    } else {
                        auto shared = std::make_shared<const std::vector<StatePoint>>(data);
                        const auto domain = DomainSpec::counts(1);
                        if (config.lrm.beta_mode == BetaMode::Calibrate) {
                            const LossMaker make = [&model, shared, domain](std::span<const std::size_t> u) {
                                return std::make_shared<const DfdLoss>(model, *shared, domain, u);
                            };
                            beta = calibrate_laplace(make, data.size(), prior, calib_config(config, 7000 + n)).beta;
                        } else {
                            beta = config.lrm.beta;
                        }
                        loss = std::make_shared<const DfdLoss>(model, *shared, domain);
                    }
                    const auto fit = minimise_loss(*loss, prior.mu);
                    const Eigen::MatrixXd prec =
                        prior.Sigma.inverse() + beta * static_cast<double>(loss->n()) * fit.hessian;
                    const Eigen::VectorXd scales = 2.38 / std::sqrt(2.0) * prec.inverse().diagonal().cwiseSqrt();
                    const LossTarget target(m == Method::Dfd ? LossKind::Dfd : LossKind::TruncatedLikelihood, loss,
                                            prior, beta);
                    RwmhOptions o;
                    o.iterations = config.mcmc.draws + config.mcmc.burn_in;
                    o.burn_in = config.mcmc.burn_in;
                    o.chains = 1;
                    (void)rwmh(target.function(), fit.mode, scales, o, config.rng(8000 + n));
                    break;
                }
                default:
                    throw ConfigError("method " + to_string(m) + " is not part of the timing study");
                }
                const double t = since(t0);
                if (t > config.timing.timeout_seconds) {
                    row.timed_out = true;
                    dead[m] = true;
                    break;
                }
                ts.push_back(t);
            }
            row.repeats = ts.size();
            if (!ts.empty()) {
                row.mean_seconds = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(ts.size());
                double ss = 0.0;
                for (double x : ts) ss += (x - row.mean_seconds) * (x - row.mean_seconds);
                row.sd_seconds = ts.size() > 1 ? std::sqrt(ss / static_cast<double>(ts.size() - 1)) : 0.0;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

namespace {

void run_timing(Run& run)
{
    auto& b = run.bundle;
    b.timing = benchmark_timing(run.cfg);
    ++b.method_runs;
    std::vector<SvgPlot> panels;
    SvgPlot p("wall clock by n", "n", "seconds");
    p.set_log_y(true);
    std::size_t k = 0;
    CsvWriter sp({"method", "n", "speedup_of_lrm"});
    for (auto m : run.cfg.methods) {
        std::vector<double> xs, ys, es;
        for (const auto& t : b.timing) {
            if (t.method != to_string(m) || t.repeats == 0) continue;
            xs.push_back(static_cast<double>(t.n));
            ys.push_back(t.mean_seconds);
            es.push_back(t.sd_seconds);
            if (m != Method::Lrm) {
                for (const auto& l : b.timing)
                    if (l.method == "lrm" && l.n == t.n && l.repeats > 0 && l.mean_seconds > 0.0) {
                        sp.cell(t.method).cell(t.n).cell(t.mean_seconds / l.mean_seconds);
                        sp.end_row();
                    }
            }
        }
        p.line(xs, ys, palette(k), to_string(m));
        p.error_bars(xs, ys, es, palette(k), to_string(m));
        ++k;
    }
    for (const auto& t : b.timing)
        if (t.timed_out) b.failures.push_back(t.method + " [n=" + std::to_string(t.n) + "]: timed out");
    if (b.failures.size() >= b.method_runs) b.method_runs = b.failures.size() + 1;
    panels.push_back(std::move(p));
    run.out.write("timing.svg", render_svg(panels, 1));
    run.out.write("speedup.csv", sp.text());
}

} // namespace

ResultBundle run_experiment(const ExperimentConfig& config)
{
    config.validate();
    OutputDir out(config.output_dir, config.overwrite);
    ResultBundle bundle;
    bundle.experiment = config.experiment;
    Run run{config, out, bundle, config.gaussian_prior(), {}, {}, 0};

    switch (config.experiment) {
    case ExperimentId::Cmp1d: run_cmp1d(run); break;
    case ExperimentId::Cmp1dSensitivity: run_sensitivity(run); break;
    case ExperimentId::CmpGraphical: run_graphical(run); break;
    case ExperimentId::Ingarch: run_ingarch(run); break;
    case ExperimentId::Ising: run_ising(run); break;
    case ExperimentId::Potts: run_potts(run); break;
    case ExperimentId::RobustCmp: run_robust(run); break;
    case ExperimentId::Timing: run_timing(run); break;
    }
    write_tables(run);

    json info;
    info["experiment"] = to_string(config.experiment);
    info["seed"] = config.seed;
    info["method_runs"] = bundle.method_runs;
    info["failures"] = bundle.failures;
    out.write_manifest(info.dump());
    bundle.manifest = out.entries();
    return bundle;
}

} // namespace lrmbayes::harness
