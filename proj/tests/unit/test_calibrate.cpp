#include "lrmbayes/calibrate.hpp"
#include "lrmbayes/samplers.hpp"
#include "lrmbayes/special.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <doctest.h>

#include <algorithm>
#include <memory>

using namespace lrmbayes;

namespace {

/// Unit i contributes (eta - x_i)^2: a Gaussian location likelihood at beta = 1/2.
CalibrationProblem location_problem(std::size_t n, std::uint64_t seed)
{
    Rng rng = make_rng({.seed = seed});
    std::normal_distribution<double> z(2.0, 1.0);
    auto xs = std::make_shared<std::vector<double>>(n);
    for (auto& x : *xs) x = z(rng);
    CalibrationProblem p;
    p.units = n;
    p.prior = GaussianPrior::isotropic(Eigen::VectorXd::Zero(1), 100.0);
    p.build = [xs](std::span<const std::size_t> u) {
        const std::size_t m = u.empty() ? xs->size() : u.size();
        double s = 0.0, s2 = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double x = u.empty() ? (*xs)[k] : (*xs)[u[k]];
            s += x;
            s2 += x * x;
        }
        QuadraticLoss l = QuadraticLoss::zero(1, m);
        l.Lambda(0, 0) = 1.0;
        l.nu(0) = s / m;
        l.c = s2 / m;
        return l;
    };
    return p;
}

} // namespace

TEST_SUITE("calibrate") {

TEST_CASE("Gaussian location: calibrated beta is near the likelihood value 1/2")
{
    CalibrationConfig cfg;
    cfg.bootstrap = 400;
    cfg.rng = {.seed = 3};
    const auto r = calibrate_beta(location_problem(500, 1), cfg);
    CHECK(r.bracket_found);
    CHECK(r.coverage >= 0.95);
    CHECK(r.beta > 0.3);
    CHECK(r.beta < 0.8);
    CHECK(r.curve.size() >= 25);
    CHECK(std::is_sorted(r.curve.begin(), r.curve.end(), [](auto& a, auto& b) { return a.beta < b.beta; }));
}

TEST_CASE("calibration is reproducible and thread-count independent")
{
    CalibrationConfig cfg;
    cfg.bootstrap = 50;
    cfg.rng = {.seed = 9};
    const auto p = location_problem(200, 2);
    const auto a = calibrate_beta(p, cfg);
    cfg.threads = 4;
    const auto b = calibrate_beta(p, cfg);
    CHECK(a.beta == b.beta);
    CHECK(a.coverage == b.coverage);
    cfg.rng.seed = 10;
    CHECK(calibrate_beta(p, cfg).beta != a.beta);
}

TEST_CASE("coverage rises as beta falls")
{
    CalibrationConfig cfg;
    cfg.bootstrap = 100;
    const auto p = location_problem(300, 4);
    const CoverageEvaluator ev(p, cfg);
    CHECK(ev.coverage(1e-3) >= ev.coverage(1.0));
    CHECK(ev.coverage(1.0) >= ev.coverage(1e3));
    CHECK(ev.coverage(1e3) < 0.5);
}

TEST_CASE("CMP LRM problem calibrates inside the bracket")
{
    Rng rng = make_rng({.seed = 5});
    std::vector<StatePoint> data;
    for (auto x : sample_cmp_rejection(4.0, 1.25, 1000, rng)) data.push_back({x});
    const CmpUnivariate model;
    const auto M = build_offset_matching_set({1}, DomainSpec::counts(1));
    const auto p = lrm_problem(model, data, M, PmfRecipe{}, GaussianPrior::isotropic(Eigen::Vector2d(3, 3), 1.0));
    CalibrationConfig cfg;
    const auto r = calibrate_beta(p, cfg);
    CHECK(r.bracket_found);
    CHECK(std::abs(r.coverage - 0.95) <= 2.0 / std::sqrt(50.0));
    CHECK(r.flag.empty());
}

} // TEST_SUITE

TEST_SUITE("calibrate") {

TEST_CASE("chi-square quantile matches boost")
{
    for (unsigned k : {1u, 2u, 5u, 20u, 65u})
        for (double level : {0.5, 0.9, 0.95, 0.99}) {
            const boost::math::chi_squared_distribution<double> chi(k);
            CHECK(chi2_quantile(k, level) == doctest::Approx(boost::math::quantile(chi, level)).epsilon(1e-8));
            CHECK(chi2_cdf(k, chi2_quantile(k, level)) == doctest::Approx(level).epsilon(1e-10));
        }
}

} // TEST_SUITE
