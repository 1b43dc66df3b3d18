#include "lrmbayes/error.hpp"
#include "lrmbayes/lrm.hpp"
#include "lrmbayes/samplers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lrmbayes;

namespace {

std::vector<StatePoint> cmp_draws(double t1, double t2, std::size_t n, std::uint64_t seed)
{
    Rng rng = make_rng({.seed = seed});
    std::vector<StatePoint> out;
    for (auto x : sample_cmp_rejection(t1, t2, n, rng)) out.push_back({x});
    return out;
}

std::vector<double> random_pmf(std::size_t k, std::mt19937_64& rng)
{
    std::gamma_distribution<double> g(1.0);
    std::vector<double> p(k);
    double s = 0.0;
    for (auto& v : p) s += (v = g(rng) + 1e-3);
    for (auto& v : p) v /= s;
    return p;
}

} // namespace

TEST_SUITE("lrm") {

TEST_CASE("property: divergence is nonnegative and vanishes at q = p")
{
    std::mt19937_64 rng(17);
    const auto dom = DomainSpec::finite(1, 12);
    const auto M = build_offset_matching_set({-1, 1}, dom);
    for (int rep = 0; rep < 50; ++rep) {
        const auto q = random_pmf(12, rng), p = random_pmf(12, rng);
        CHECK(lrm_divergence_exact(q, p, dom, M) > 0.0);
        CHECK(lrm_divergence_exact(q, q, dom, M) == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("divergence by hand on two states")
{
    // D = sum_x q(x) |M(x)|^-1 sum (log p(x')/p(x) - log q(x')/q(x))^2
    const auto dom = DomainSpec::finite(1, 2);
    const auto M = build_offset_matching_set({1}, dom, BoundaryPolicy::Wrap);
    const std::vector<double> q{0.3, 0.7}, p{0.6, 0.4};
    const double r = std::log(0.4 / 0.6) - std::log(0.7 / 0.3);
    const double want = 0.3 * r * r + 0.7 * r * r;
    CHECK(lrm_divergence_exact(q, p, dom, M) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("quadratic form agrees with the direct loss")
{
    const auto data = cmp_draws(4.0, 1.25, 500, 1);
    const CmpUnivariate model;
    const auto M = build_offset_matching_set({-1, 1}, DomainSpec::counts(1));
    const auto q = smooth(fit_empirical(data), 0.5, BasePmf::count_mixture_for(data));
    const auto loss = build_quadratic(model, data, M, q);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    for (int k = 0; k < 20; ++k) {
        const Eigen::Vector2d eta(1.4 + z(rng), 1.2 + z(rng));
        const double direct = lrm_loss_direct(model, model.theta_of_eta(eta), data, M, q);
        CHECK(loss.evaluate(eta) == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("constant weights reproduce the unweighted loss")
{
    const auto data = cmp_draws(4.0, 1.25, 300, 3);
    const CmpUnivariate model;
    const auto M = build_offset_matching_set({1}, DomainSpec::counts(1));
    const auto q = smooth(fit_empirical(data), 0.0, std::nullopt);
    const auto a = build_quadratic(model, data, M, q);
    const auto b = build_quadratic(model, data, M, q, WeightFunction::constant());
    CHECK(a.Lambda == b.Lambda);
    CHECK(a.nu == b.nu);
    CHECK(a.c == b.c);
    const auto w = build_quadratic(model, data, M, q, poisson_weights(data));
    CHECK_FALSE(w.Lambda.isApprox(a.Lambda));
}

TEST_CASE("thread count does not change the assembled loss")
{
    const auto data = cmp_draws(4.0, 0.75, 3000, 4);
    const CmpUnivariate model;
    const auto M = build_offset_matching_set({-1, 1}, DomainSpec::counts(1));
    const auto q = smooth(fit_empirical(data), 0.0, std::nullopt);
    AssemblyOptions one, four;
    four.threads = 4;
    const auto a = build_quadratic(model, data, M, q, WeightFunction::constant(), one);
    const auto b = build_quadratic(model, data, M, q, WeightFunction::constant(), four);
    CHECK(a.Lambda == b.Lambda);
    CHECK(a.nu == b.nu);
}

TEST_CASE("one-dimensional conjugate update by hand")
{
    QuadraticLoss loss = QuadraticLoss::zero(1, 40);
    loss.Lambda(0, 0) = 2.0;
    loss.nu(0) = 3.0;
    const GaussianPrior prior{Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 4.0)};
    const double beta = 0.25;
    const auto post = conjugate_update(prior, loss, beta);
    const double prec = 1.0 / 4.0 + 2.0 * beta * 40 * 2.0;
    CHECK(post.Sigma(0, 0) == doctest::Approx(1.0 / prec));
    CHECK(post.mu(0) == doctest::Approx((1.0 / 4.0 + 2.0 * beta * 40 * 3.0) / prec));
}

TEST_CASE("property: conjugate posterior mode minimises the penalised loss")
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index p = 3;
        Eigen::MatrixXd a(p, p);
        for (Eigen::Index i = 0; i < p * p; ++i) a.data()[i] = z(rng);
        QuadraticLoss loss = QuadraticLoss::zero(p, 50);
        loss.Lambda = a * a.transpose() + Eigen::MatrixXd::Identity(p, p);
        for (Eigen::Index i = 0; i < p; ++i) loss.nu(i) = z(rng);
        const auto prior = GaussianPrior::isotropic(Eigen::VectorXd::Zero(p), 2.0);
        const auto post = conjugate_update(prior, loss, 0.7);
        auto objective = [&](const Eigen::VectorXd& e) {
            return 0.7 * 50 * loss.evaluate(e) + 0.5 * e.squaredNorm() / 2.0;
        };
        const double f0 = objective(post.mu);
        for (Eigen::Index i = 0; i < p; ++i) {
            Eigen::VectorXd e = post.mu;
            e(i) += 1e-3;
            CHECK(objective(e) > f0);
            e(i) -= 2e-3;
            CHECK(objective(e) > f0);
        }
    }
}

TEST_CASE("minimum-LRM estimate recovers CMP natural parameters")
{
    const auto data = cmp_draws(4.0, 1.25, 20000, 5);
    const CmpUnivariate model;
    const auto M = build_offset_matching_set({1}, DomainSpec::counts(1));
    const auto loss = build_quadratic(model, data, M, smooth(fit_empirical(data), 0.0, std::nullopt));
    const auto eta = min_lrm_estimate(loss);
    CHECK(eta(0) == doctest::Approx(std::log(4.0)).epsilon(0.05));
    CHECK(eta(1) == doctest::Approx(1.25).epsilon(0.08));
    CHECK_THROWS_AS(min_lrm_estimate(QuadraticLoss::zero(2, 1)), NumericalError);
}

TEST_CASE("JSON round trip of loss and posterior")
{
    QuadraticLoss loss = QuadraticLoss::zero(2, 7);
    loss.Lambda << 2.0, 0.1, 0.1, 1.0 / 3.0;
    loss.nu << -1.5, 1e-17;
    loss.c = 0.25;
    const auto back = quadratic_loss_from_json(to_json(loss));
    CHECK(back.Lambda == loss.Lambda);
    CHECK(back.nu == loss.nu);
    CHECK(back.c == loss.c);
    CHECK(back.n == 7);
    const auto post = conjugate_update(GaussianPrior::isotropic(Eigen::Vector2d::Zero(), 1.0), loss, 1.0,
                                       {SignConstraint::None, SignConstraint::Negative});
    const auto pb = gaussian_posterior_from_json(to_json(post));
    CHECK(pb.mu == post.mu);
    CHECK(pb.Sigma == post.Sigma);
    CHECK(pb.constraints == post.constraints);
}

TEST_CASE("MRF local loss against a by-hand sum")
{
    const auto model = MrfModel::potts({3, 3}, 3);
    const StatePoint lat{0, 1, 1, 2, 1, 0, 0, 0, 2};
    const std::vector<StatePoint> lats{lat};
    const auto table = fit_local_conditionals(lats, model.geometry(), 3, 1.0);
    const auto loss = mrf_local_loss(model, table, lats);
    const Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 0.37);
    double want = 0.0;
    for (std::size_t k = 0; k < 9; ++k) {
        const auto key = neighbourhood_key(lat, model.geometry(), k, 3);
        for (std::int64_t s = 0; s < 3; ++s) {
            if (s == lat[k]) continue;
            double ds = 0.0, dp = 0.0;
            model.site_change(lat, k, s, ds, dp);
            // the loss drops the theta-free square of the PMF log-ratio
            const double r = eta(0) * dp;
            const double lq = std::log(table.conditional(key, s) / table.conditional(key, lat[k]));
            want += (r * r - 2.0 * r * lq) / 3.0;
        }
    }
    CHECK(loss.n == 9);
    CHECK(loss.evaluate(eta) == doctest::Approx(want / 9.0).epsilon(1e-12));
}

} // TEST_SUITE
