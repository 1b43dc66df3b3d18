#include "lrmbayes/harness/config.hpp"

#include "lrmbayes/error.hpp"
#include "lrmbayes/models.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace lrmbayes::harness {

using json = nlohmann::json;

namespace {

template <class E>
struct Names {
    E value;
    const char* name;
};

constexpr Names<ExperimentId> kExperiments[] = {
    {ExperimentId::Cmp1d, "cmp1d"},       {ExperimentId::Cmp1dSensitivity, "cmp1d-sensitivity"},
    {ExperimentId::CmpGraphical, "cmp-graphical"}, {ExperimentId::Ingarch, "ingarch"},
    {ExperimentId::Ising, "ising"},       {ExperimentId::Potts, "potts"},
    {ExperimentId::RobustCmp, "robust-cmp"}, {ExperimentId::Timing, "timing"},
};

constexpr Names<Method> kMethods[] = {
    {Method::Lrm, "lrm"}, {Method::Dfd, "dfd"}, {Method::Pl, "pl"},
    {Method::TruncBayes, "trunc-bayes"}, {Method::Exchange, "exchange"},
};

template <class E, std::size_t N>
std::string name_of(const Names<E> (&table)[N], E v)
{
    for (const auto& t : table)
        if (t.value == v) return t.name;
    return "?";
}

template <class E, std::size_t N>
E parse_name(const Names<E> (&table)[N], const std::string& s, const char* what)
{
    for (const auto& t : table)
        if (s == t.name) return t.value;
    std::string opts;
    for (const auto& t : table) opts += std::string(opts.empty() ? "" : ", ") + t.name;
    throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected one of " + opts + ")");
}

} // namespace

std::string to_string(ExperimentId id) { return name_of(kExperiments, id); }
std::string to_string(Method m) { return name_of(kMethods, m); }
std::string to_string(BetaMode m) { return m == BetaMode::Fixed ? "fixed" : "calibrate"; }
ExperimentId experiment_from_string(const std::string& s) { return parse_name(kExperiments, s, "experiment"); }
Method method_from_string(const std::string& s) { return parse_name(kMethods, s, "method"); }

BetaMode beta_mode_from_string(const std::string& s)
{
    if (s == "fixed") return BetaMode::Fixed;
    if (s == "calibrate") return BetaMode::Calibrate;
    throw ConfigError("unknown beta mode '" + s + "' (expected fixed or calibrate)");
}

std::vector<Method> valid_methods(ExperimentId id)
{
    switch (id) {
    case ExperimentId::Cmp1d:
    case ExperimentId::Timing: return {Method::Lrm, Method::Dfd, Method::TruncBayes};
    case ExperimentId::Cmp1dSensitivity:
    case ExperimentId::RobustCmp:
    case ExperimentId::Ingarch: return {Method::Lrm};
    case ExperimentId::CmpGraphical: return {Method::Lrm, Method::Dfd};
    case ExperimentId::Ising:
    case ExperimentId::Potts: return {Method::Lrm, Method::Dfd, Method::Pl, Method::Exchange};
    }
    return {};
}

ExperimentConfig ExperimentConfig::defaults(ExperimentId id)
{
    ExperimentConfig c;
    c.experiment = id;
    c.output_dir = "out/" + to_string(id);
    auto cmp_prior = [&c] {
        c.prior.mean = {3.0, 3.0};
        c.prior.cov = {{1.0, 0.0}, {0.0, 1.0}};
    };
    switch (id) {
    case ExperimentId::Cmp1d:
        c.methods = {Method::Lrm, Method::Dfd, Method::TruncBayes};
        c.model.theta = {4.0, 0.75};
        cmp_prior();
        break;
    case ExperimentId::Cmp1dSensitivity:
        c.methods = {Method::Lrm};
        c.model.theta = {4.0, 0.75};
        c.lrm.beta_mode = BetaMode::Fixed;
        c.lrm.alphas = {0.0, 0.1, 0.5, 1.0};
        c.lrm.offset_sets = {{1}, {-1, 1}, {-2, -1, 1, 2}};
        cmp_prior();
        break;
    case ExperimentId::CmpGraphical: {
        c.methods = {Method::Lrm};
        c.model.dimension = 10;
        const auto t = synthetic_count_matrix_truth(10);
        c.model.theta.assign(t.data(), t.data() + t.size());
        c.data.n = 878;
        c.lrm.alpha = 0.1;
        c.lrm.offsets = {-2, -1, 1, 2};
        break;
    }
    case ExperimentId::Ingarch:
        c.methods = {Method::Lrm};
        c.model.theta = {0.7, 0.4, 1.0};
        c.model.ar_phi = 0.3;
        c.data.n = 366;
        c.lrm.alpha = 1.0;
        c.lrm.offsets = {-1, 1};
        c.prior.mean = {1.0, 1.0, 1.0};
        c.prior.cov = {{5.0, 0.0, 0.0}, {0.0, 5.0, 0.0}, {0.0, 0.0, 5.0}};
        c.mcmc.draws = 2000;
        c.mcmc.burn_in = 3000;
        c.mcmc.chains = 4;
        break;
    case ExperimentId::Ising:
        c.methods = {Method::Lrm, Method::Pl, Method::Dfd};
        c.model.theta = {0.30, 0.15};
        c.model.states = 2;
        c.data.grids = {50, 100, 150, 200, 250};
        c.lrm.alpha = 0.1;
        c.prior.mean = {0.5, 0.5};
        c.prior.cov = {{2.0, 0.0}, {0.0, 2.0}};
        c.mcmc.draws = 5000;
        c.mcmc.burn_in = 1000;
        c.mcmc.chains = 4;
        break;
    case ExperimentId::Potts:
        c.methods = {Method::Lrm, Method::Pl, Method::Dfd, Method::Exchange};
        c.model.states = 4;
        c.data.grid = 171;
        c.lrm.alpha = 1.0;
        c.lrm.truncation_quantile = 0.05;
        c.prior.mean = {0.0};
        c.prior.cov = {{10.0}};
        c.mcmc.draws = 2000;
        c.mcmc.burn_in = 500;
        break;
    case ExperimentId::RobustCmp:
        c.methods = {Method::Lrm};
        c.model.theta = {4.0, 1.25};
        c.data.n = 1000;
        c.lrm.beta_mode = BetaMode::Fixed;
        cmp_prior();
        break;
    case ExperimentId::Timing:
        c.methods = {Method::Lrm, Method::Dfd, Method::TruncBayes};
        c.model.theta = {4.0, 1.25};
        c.mcmc.draws = 1000;
        c.mcmc.burn_in = 5000;
        cmp_prior();
        break;
    }
    if (c.prior.mean.empty()) {
        const auto p = c.parameter_dimension();
        c.prior.mean.assign(p, 0.0);
        c.prior.cov.assign(p, std::vector<double>(p, 0.0));
        for (std::size_t i = 0; i < p; ++i) c.prior.cov[i][i] = 1.0;
    }
    return c;
}

std::size_t ExperimentConfig::parameter_dimension() const
{
    switch (experiment) {
    case ExperimentId::CmpGraphical: return CmpGraphical(std::max<std::size_t>(model.dimension, 1)).dimension();
    case ExperimentId::Ingarch: return 3;
    case ExperimentId::Potts: return 1;
    default: return 2;
    }
}

GaussianPrior ExperimentConfig::gaussian_prior() const
{
    const auto p = prior.mean.size();
    GaussianPrior g;
    g.mu = Eigen::Map<const Eigen::VectorXd>(prior.mean.data(), static_cast<Eigen::Index>(p));
    g.Sigma.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    if (prior.cov.size() != p) throw ConfigError("prior covariance must be " + std::to_string(p) + " x " + std::to_string(p));
    for (std::size_t i = 0; i < p; ++i) {
        if (prior.cov[i].size() != p)
            throw ConfigError("prior covariance must be " + std::to_string(p) + " x " + std::to_string(p));
        for (std::size_t j = 0; j < p; ++j)
            g.Sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = prior.cov[i][j];
    }
    return g;
}

namespace {

void check_offsets(const std::vector<std::int64_t>& offsets)
{
    if (offsets.empty()) throw ConfigError("matching-set offsets must be nonempty");
    std::set<std::int64_t> seen;
    for (auto o : offsets) {
        if (o == 0) throw ConfigError("matching-set offsets must be nonzero");
        if (!seen.insert(o).second) throw ConfigError("matching-set offsets must be distinct");
    }
}

} // namespace

void ExperimentConfig::validate() const
{
    const std::string id = to_string(experiment);
    if (methods.empty()) throw ConfigError(id + ": method list is empty");
    const auto ok = valid_methods(experiment);
    std::set<Method> seen;
    for (auto m : methods) {
        if (std::find(ok.begin(), ok.end(), m) == ok.end())
            throw ConfigError(id + ": method '" + to_string(m) + "' is not available for this experiment");
        if (!seen.insert(m).second) throw ConfigError(id + ": method '" + to_string(m) + "' listed twice");
    }
    if (threads == 0) throw ConfigError("threads must be at least 1");
    if (output_dir.empty()) throw ConfigError("output directory must be set");

    const auto p = parameter_dimension();
    if (prior.mean.size() != p)
        throw ConfigError(id + ": prior mean has " + std::to_string(prior.mean.size()) + " entries, model has " +
                          std::to_string(p) + " parameters");
    gaussian_prior().validate();

    if (!(lrm.alpha >= 0.0) || !std::isfinite(lrm.alpha)) throw ConfigError("alpha must be non-negative");
    if (!(lrm.epsilon > 0.0 && lrm.epsilon < 1.0)) throw ConfigError("base-PMF epsilon must lie in (0, 1)");
    if (experiment != ExperimentId::Ising && experiment != ExperimentId::Potts) check_offsets(lrm.offsets);
    if (!(lrm.beta > 0.0) || !std::isfinite(lrm.beta)) throw ConfigError("beta must be positive and finite");
    if (lrm.beta_mode == BetaMode::Calibrate) {
        if (lrm.bootstrap < 2) throw ConfigError("calibration needs at least 2 bootstrap resamples");
        if (!(lrm.delta > 0.0 && lrm.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    }
    if (!(lrm.truncation_quantile >= 0.0 && lrm.truncation_quantile < 1.0))
        throw ConfigError("truncation quantile must lie in [0, 1)");
    for (double a : lrm.alphas)
        if (!(a >= 0.0)) throw ConfigError("alpha sweep values must be non-negative");
    for (const auto& o : lrm.offset_sets) check_offsets(o);
    if (experiment == ExperimentId::Cmp1dSensitivity && lrm.alphas.empty() && lrm.offset_sets.empty())
        throw ConfigError("cmp1d-sensitivity needs an alpha sweep or an offset-set sweep");

    if (mcmc.draws == 0) throw ConfigError("MCMC draws must be positive");
    if (mcmc.chains == 0) throw ConfigError("MCMC chains must be positive");
    if (!(mcmc.proposal_scale >= 0.0)) throw ConfigError("proposal scale must be non-negative");
    if (!(mcmc.phi_prior_sd > 0.0)) throw ConfigError("phi prior SD must be positive");
    if (!(mcmc.phi_scale >= 0.0)) throw ConfigError("phi proposal scale must be non-negative");
    if (experiment == ExperimentId::CmpGraphical && mcmc.predictive_draws == 0)
        throw ConfigError("predictive draws must be positive");

    const bool external = data.path.has_value();
    if (external && (experiment == ExperimentId::Ising || experiment == ExperimentId::Timing ||
                     experiment == ExperimentId::RobustCmp))
        throw ConfigError(id + " simulates its own data; data.path is not accepted");

    switch (experiment) {
    case ExperimentId::Cmp1d:
    case ExperimentId::Cmp1dSensitivity:
    case ExperimentId::RobustCmp:
    case ExperimentId::Timing: {
        if (!external || experiment == ExperimentId::Timing) {
            const Eigen::Map<const Eigen::VectorXd> th(model.theta.data(), static_cast<Eigen::Index>(model.theta.size()));
            if (!CmpUnivariate().in_parameter_space(th))
                throw ConfigError(id + ": theta must be (theta1 > 0, theta2 > 0)");
        }
        if (data.n < 2 && experiment != ExperimentId::Timing) throw ConfigError("n must be at least 2");
        if (experiment == ExperimentId::RobustCmp && !(data.contamination >= 0.0 && data.contamination < 1.0))
            throw ConfigError("contamination fraction must lie in [0, 1)");
        if (experiment == ExperimentId::RobustCmp && !(data.contamination_mean > 0.0))
            throw ConfigError("contamination mean must be positive");
        if (experiment == ExperimentId::Timing) {
            if (timing.repeats == 0) throw ConfigError("timing repeats must be at least 1");
            if (timing.n_sweep.empty()) throw ConfigError("timing n sweep is empty");
            for (auto n : timing.n_sweep)
                if (n < 2) throw ConfigError("timing n values must be at least 2");
            if (!(timing.timeout_seconds > 0.0)) throw ConfigError("timing timeout must be positive");
        }
        break;
    }
    case ExperimentId::CmpGraphical: {
        if (model.dimension < 1) throw ConfigError("cmp-graphical needs dimension >= 1");
        if (!external) {
            const Eigen::Map<const Eigen::VectorXd> th(model.theta.data(), static_cast<Eigen::Index>(model.theta.size()));
            if (!CmpGraphical(model.dimension).in_parameter_space(th))
                throw ConfigError("cmp-graphical: theta must have " + std::to_string(p) +
                                  " entries with positive dispersion terms");
            if (data.n < 2) throw ConfigError("n must be at least 2");
        }
        break;
    }
    case ExperimentId::Ingarch:
        if (!(std::abs(model.ar_phi) < 1.0)) throw ConfigError("ingarch: |phi| must be below 1");
        if (!external) {
            if (model.theta.size() != 3 || !(model.theta[2] > 0.0))
                throw ConfigError("ingarch: theta must be (theta1, theta2, theta3 > 0)");
            if (data.n < 3) throw ConfigError("ingarch: series length must be at least 3");
        }
        if (!(std::abs(mcmc.phi_prior_mean) < 1.0)) throw ConfigError("ingarch: phi prior mean must lie in (-1, 1)");
        break;
    case ExperimentId::Ising:
        if (model.theta.size() != 2) throw ConfigError("ising: theta must have 2 entries");
        if (data.grids.empty()) throw ConfigError("ising: grid sweep is empty");
        for (auto g : data.grids)
            if (g < 2) throw ConfigError("ising: grid sizes must be at least 2");
        if (data.repetitions == 0) throw ConfigError("ising: repetitions must be at least 1");
        if (data.sweeps == 0) throw ConfigError("ising: Gibbs sweeps must be at least 1");
        break;
    case ExperimentId::Potts:
        if (model.states < 2) throw ConfigError("potts: states must be at least 2");
        if (!external && data.grid < 2) throw ConfigError("potts: grid must be at least 2");
        break;
    }
}

// ---- JSON

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
void take(const json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"experiment", "methods", "model", "data", "lrm", "prior", "mcmc", "timing", "seed", "threads",
                       "output_dir", "overwrite"},
                   "config");
    if (!j.contains("experiment") || !j["experiment"].is_string()) throw ConfigError("config needs an 'experiment' name");
    ExperimentConfig c = defaults(experiment_from_string(j["experiment"].get<std::string>()));

    if (j.contains("methods")) {
        std::vector<std::string> names;
        take(j, "methods", names, "config");
        c.methods.clear();
        for (const auto& n : names) c.methods.push_back(method_from_string(n));
    }
    take(j, "seed", c.seed, "config");
    take(j, "threads", c.threads, "config");
    take(j, "output_dir", c.output_dir, "config");
    take(j, "overwrite", c.overwrite, "config");

    if (j.contains("model")) {
        const auto& m = j["model"];
        reject_unknown(m, {"theta", "ar_phi", "dimension", "states"}, "model");
        const auto dim_before = c.model.dimension;
        take(m, "theta", c.model.theta, "model");
        take(m, "ar_phi", c.model.ar_phi, "model");
        take(m, "dimension", c.model.dimension, "model");
        take(m, "states", c.model.states, "model");
        if (c.experiment == ExperimentId::CmpGraphical && c.model.dimension != dim_before) {
            if (!m.contains("theta")) {
                const auto t = synthetic_count_matrix_truth(std::max<std::size_t>(c.model.dimension, 1));
                c.model.theta.assign(t.data(), t.data() + t.size());
            }
            if (!j.contains("prior")) {
                const auto p = c.parameter_dimension();
                c.prior.mean.assign(p, 0.0);
                c.prior.cov.assign(p, std::vector<double>(p, 0.0));
                for (std::size_t i = 0; i < p; ++i) c.prior.cov[i][i] = 1.0;
            }
        }
    }
    if (j.contains("data")) {
        const auto& d = j["data"];
        reject_unknown(d, {"n", "grid", "grids", "repetitions", "sweeps", "path", "contamination", "contamination_mean"},
                       "data");
        take(d, "n", c.data.n, "data");
        take(d, "grid", c.data.grid, "data");
        take(d, "grids", c.data.grids, "data");
        take(d, "repetitions", c.data.repetitions, "data");
        take(d, "sweeps", c.data.sweeps, "data");
        if (d.contains("path") && !d["path"].is_null()) {
            std::string p;
            take(d, "path", p, "data");
            c.data.path = p;
        }
        take(d, "contamination", c.data.contamination, "data");
        take(d, "contamination_mean", c.data.contamination_mean, "data");
    }
    if (j.contains("lrm")) {
        const auto& l = j["lrm"];
        reject_unknown(l, {"alpha", "epsilon", "offsets", "beta_mode", "beta", "bootstrap", "delta",
                           "truncation_quantile", "alphas", "offset_sets"},
                       "lrm");
        take(l, "alpha", c.lrm.alpha, "lrm");
        take(l, "epsilon", c.lrm.epsilon, "lrm");
        take(l, "offsets", c.lrm.offsets, "lrm");
        if (l.contains("beta_mode")) {
            std::string s;
            take(l, "beta_mode", s, "lrm");
            c.lrm.beta_mode = beta_mode_from_string(s);
        }
        take(l, "beta", c.lrm.beta, "lrm");
        take(l, "bootstrap", c.lrm.bootstrap, "lrm");
        take(l, "delta", c.lrm.delta, "lrm");
        take(l, "truncation_quantile", c.lrm.truncation_quantile, "lrm");
        take(l, "alphas", c.lrm.alphas, "lrm");
        take(l, "offset_sets", c.lrm.offset_sets, "lrm");
    }
    if (j.contains("prior")) {
        const auto& p = j["prior"];
        reject_unknown(p, {"mean", "cov"}, "prior");
        take(p, "mean", c.prior.mean, "prior");
        if (p.contains("cov")) {
            const auto& cv = p["cov"];
            const auto n = c.prior.mean.size();
            if (cv.is_number()) {
                c.prior.cov.assign(n, std::vector<double>(n, 0.0));
                for (std::size_t i = 0; i < n; ++i) c.prior.cov[i][i] = cv.get<double>();
            } else {
                take(p, "cov", c.prior.cov, "prior");
            }
        } else if (p.contains("mean") && c.prior.cov.size() != c.prior.mean.size()) {
            throw ConfigError("prior.cov is required when the prior mean changes dimension");
        }
    }
    if (j.contains("mcmc")) {
        const auto& m = j["mcmc"];
        reject_unknown(m, {"draws", "burn_in", "chains", "inner_sweeps", "proposal_scale", "phi_prior_mean",
                           "phi_prior_sd", "phi_scale", "phi_updates", "predictive_draws"},
                       "mcmc");
        take(m, "draws", c.mcmc.draws, "mcmc");
        take(m, "burn_in", c.mcmc.burn_in, "mcmc");
        take(m, "chains", c.mcmc.chains, "mcmc");
        take(m, "inner_sweeps", c.mcmc.inner_sweeps, "mcmc");
        take(m, "proposal_scale", c.mcmc.proposal_scale, "mcmc");
        take(m, "phi_prior_mean", c.mcmc.phi_prior_mean, "mcmc");
        take(m, "phi_prior_sd", c.mcmc.phi_prior_sd, "mcmc");
        take(m, "phi_scale", c.mcmc.phi_scale, "mcmc");
        take(m, "phi_updates", c.mcmc.phi_updates, "mcmc");
        take(m, "predictive_draws", c.mcmc.predictive_draws, "mcmc");
    }
    if (j.contains("timing")) {
        const auto& t = j["timing"];
        reject_unknown(t, {"n_sweep", "repeats", "timeout_seconds"}, "timing");
        take(t, "n_sweep", c.timing.n_sweep, "timing");
        take(t, "repeats", c.timing.repeats, "timing");
        take(t, "timeout_seconds", c.timing.timeout_seconds, "timing");
    }
    c.validate();
    return c;
}

std::string ExperimentConfig::to_json() const
{
    json j;
    j["experiment"] = harness::to_string(experiment);
    j["methods"] = json::array();
    for (auto m : methods) j["methods"].push_back(harness::to_string(m));
    j["model"] = {{"theta", model.theta}, {"ar_phi", model.ar_phi}, {"dimension", model.dimension},
                  {"states", model.states}};
    j["data"] = {{"n", data.n},
                 {"grid", data.grid},
                 {"grids", data.grids},
                 {"repetitions", data.repetitions},
                 {"sweeps", data.sweeps},
                 {"path", data.path ? json(*data.path) : json(nullptr)},
                 {"contamination", data.contamination},
                 {"contamination_mean", data.contamination_mean}};
    j["lrm"] = {{"alpha", lrm.alpha},
                {"epsilon", lrm.epsilon},
                {"offsets", lrm.offsets},
                {"beta_mode", harness::to_string(lrm.beta_mode)},
                {"beta", lrm.beta},
                {"bootstrap", lrm.bootstrap},
                {"delta", lrm.delta},
                {"truncation_quantile", lrm.truncation_quantile},
                {"alphas", lrm.alphas},
                {"offset_sets", lrm.offset_sets}};
    j["prior"] = {{"mean", prior.mean}, {"cov", prior.cov}};
    j["mcmc"] = {{"draws", mcmc.draws},
                 {"burn_in", mcmc.burn_in},
                 {"chains", mcmc.chains},
                 {"inner_sweeps", mcmc.inner_sweeps},
                 {"proposal_scale", mcmc.proposal_scale},
                 {"phi_prior_mean", mcmc.phi_prior_mean},
                 {"phi_prior_sd", mcmc.phi_prior_sd},
                 {"phi_scale", mcmc.phi_scale},
                 {"phi_updates", mcmc.phi_updates},
                 {"predictive_draws", mcmc.predictive_draws}};
    j["timing"] = {{"n_sweep", timing.n_sweep},
                   {"repeats", timing.repeats},
                   {"timeout_seconds", timing.timeout_seconds}};
    j["seed"] = seed;
    j["threads"] = threads;
    j["output_dir"] = output_dir;
    j["overwrite"] = overwrite;
    return j.dump(2);
}

std::string config_schema()
{
    const json number = {{"type", "number"}};
    const json integer = {{"type", "integer"}, {"minimum", 0}};
    const json numbers = {{"type", "array"}, {"items", number}};
    const json integers = {{"type", "array"}, {"items", {{"type", "integer"}}}};
    auto object = [](json props) {
        return json{{"type", "object"}, {"additionalProperties", false}, {"properties", std::move(props)}};
    };
    json experiments = json::array(), methods = json::array();
    for (const auto& e : kExperiments) experiments.push_back(e.name);
    for (const auto& m : kMethods) methods.push_back(m.name);

    json s = object({
        {"experiment", {{"enum", experiments}}},
        {"methods", {{"type", "array"}, {"items", {{"enum", methods}}}, {"uniqueItems", true}}},
        {"model", object({{"theta", numbers}, {"ar_phi", number}, {"dimension", integer}, {"states", integer}})},
        {"data", object({{"n", integer},
                         {"grid", integer},
                         {"grids", {{"type", "array"}, {"items", integer}}},
                         {"repetitions", integer},
                         {"sweeps", integer},
                         {"path", {{"type", json::array({"string", "null"})}}},
                         {"contamination", number},
                         {"contamination_mean", number}})},
        {"lrm", object({{"alpha", number},
                        {"epsilon", number},
                        {"offsets", integers},
                        {"beta_mode", {{"enum", {"fixed", "calibrate"}}}},
                        {"beta", number},
                        {"bootstrap", integer},
                        {"delta", number},
                        {"truncation_quantile", number},
                        {"alphas", numbers},
                        {"offset_sets", {{"type", "array"}, {"items", integers}}}})},
        {"prior", object({{"mean", numbers},
                          {"cov", {{"oneOf", json::array({number, {{"type", "array"}, {"items", numbers}}})}}}})},
        {"mcmc", object({{"draws", integer},
                         {"burn_in", integer},
                         {"chains", integer},
                         {"inner_sweeps", integer},
                         {"proposal_scale", number},
                         {"phi_prior_mean", number},
                         {"phi_prior_sd", number},
                         {"phi_scale", number},
                         {"phi_updates", integer},
                         {"predictive_draws", integer}})},
        {"timing", object({{"n_sweep", {{"type", "array"}, {"items", integer}}},
                           {"repeats", integer},
                           {"timeout_seconds", number}})},
        {"seed", integer},
        {"threads", integer},
        {"output_dir", {{"type", "string"}}},
        {"overwrite", {{"type", "boolean"}}},
    });
    s["$schema"] = "http://json-schema.org/draft-07/schema#";
    s["title"] = "lrmbayes experiment config";
    s["required"] = json::array({"experiment"});
    return s.dump(2);
}

} // namespace lrmbayes::harness
