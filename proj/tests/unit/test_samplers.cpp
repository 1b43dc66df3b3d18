#include "lrmbayes/error.hpp"
#include "lrmbayes/samplers.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace lrmbayes;

namespace {

double cmp_moment(double t1, double t2, int k)
{
    double z = 0.0, m = 0.0;
    for (int y = 0; y < 200; ++y) {
        const double w = std::exp(y * std::log(t1) - t2 * std::lgamma(y + 1.0));
        z += w;
        m += std::pow(y, k) * w;
    }
    return m / z;
}

} // namespace

TEST_SUITE("samplers") {

TEST_CASE("CMP rejection draws match the exact moments")
{
    for (auto [t1, t2] : {std::pair{4.0, 1.25}, std::pair{4.0, 0.75}, std::pair{0.5, 0.3}}) {
        Rng rng = make_rng({.seed = 11});
        const std::size_t n = 40000;
        const auto xs = sample_cmp_rejection(t1, t2, n, rng);
        double mean = 0.0;
        for (auto x : xs) mean += static_cast<double>(x) / n;
        const double mu = cmp_moment(t1, t2, 1);
        const double sd = std::sqrt(cmp_moment(t1, t2, 2) - mu * mu);
        CHECK(std::abs(mean - mu) < 4.0 * sd / std::sqrt(double(n)));
    }
    CHECK(CmpRejectionSampler(4.0, 1.25).poisson_proposal());
    CHECK_FALSE(CmpRejectionSampler(4.0, 0.75).poisson_proposal());
}

TEST_CASE("theta2 = 1 gives Poisson draws")
{
    Rng rng = make_rng({.seed = 12});
    const auto xs = sample_cmp_rejection(3.0, 1.0, 30000, rng);
    const boost::math::poisson_distribution<double> pois(3.0);
    for (std::int64_t k = 0; k < 8; ++k) {
        const double f = static_cast<double>(std::count(xs.begin(), xs.end(), k)) / xs.size();
        const double p = boost::math::pdf(pois, static_cast<double>(k));
        CHECK(std::abs(f - p) < 4.0 * std::sqrt(p * (1 - p) / xs.size()));
    }
}

TEST_CASE("truncated normal: support and mean")
{
    Rng rng = make_rng({.seed = 13});
    const double mu = 0.3, sd = 1.2, lo = 1.0;
    double sum = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const double v = sample_truncated_normal(mu, sd, lo, INFINITY, rng);
        REQUIRE(v > lo);
        sum += v;
    }
    const boost::math::normal_distribution<double> z;
    const double a = (lo - mu) / sd;
    const double want = mu + sd * boost::math::pdf(z, a) / boost::math::cdf(boost::math::complement(z, a));
    CHECK(sum / n == doctest::Approx(want).epsilon(0.01));
    const double far = sample_truncated_normal(0.0, 1.0, -INFINITY, -12.0, rng);
    CHECK(far < -12.0);
    CHECK(far > -14.0);
}

TEST_CASE("RWMH on a Gaussian target")
{
    const LogTarget target = [](const Eigen::VectorXd& x) { return -0.5 * std::pow((x(0) - 1.0) / 2.0, 2); };
    RwmhOptions o;
    o.iterations = 40000;
    o.burn_in = 2000;
    o.chains = 2;
    const auto c = rwmh(target, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.38 * 2.0), o, {.seed = 14});
    CHECK(c.mean()(0) == doctest::Approx(1.0).epsilon(0.1));
    CHECK(c.sd()(0) == doctest::Approx(2.0).epsilon(0.05));
    for (double a : c.acceptance) {
        CHECK(a >= 0.1);
        CHECK(a <= 0.7);
    }
    const auto gr = gelman_rubin(c);
    REQUIRE(gr.rhat[0].has_value());
    CHECK(*gr.rhat[0] < 1.02);
}

TEST_CASE("RWMH draws are reproducible and independent of the thread count")
{
    const LogTarget target = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
    RwmhOptions o;
    o.iterations = 500;
    o.chains = 3;
    const auto a = rwmh(target, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, 1.0), o, {.seed = 7});
    o.threads = 3;
    const auto b = rwmh(target, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, 1.0), o, {.seed = 7});
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.chains[k] == b.chains[k]);
    CHECK_FALSE(a.chains[0] == a.chains[1]);
}

TEST_CASE("Gelman-Rubin flags separated chains")
{
    ChainSet c;
    c.names = {"x"};
    Rng rng = make_rng({.seed = 15});
    std::normal_distribution<double> z;
    for (double shift : {0.0, 3.0}) {
        Eigen::MatrixXd m(500, 1);
        for (Eigen::Index i = 0; i < 500; ++i) m(i, 0) = shift + z(rng);
        c.chains.push_back(m);
        c.acceptance.push_back(0.3);
    }
    CHECK(*gelman_rubin(c).rhat[0] > 1.5);
    c.chains[1].array() -= 3.0;
    CHECK(*gelman_rubin(c).rhat[0] < 1.05);
}

TEST_CASE("constrained eta draws respect their signs")
{
    GaussianPosterior post;
    post.mu = Eigen::Vector3d(0.5, 0.2, -0.1);
    post.Sigma = Eigen::Matrix3d::Identity();
    post.Sigma(0, 1) = post.Sigma(1, 0) = 0.5;
    post.constraints = {SignConstraint::None, SignConstraint::Positive, SignConstraint::Negative};
    Rng rng = make_rng({.seed = 16});
    const auto d = sample_eta_posterior(post, 2000, rng);
    CHECK(d.rows() == 2000);
    CHECK(d.col(1).minCoeff() > 0.0);
    CHECK(d.col(2).maxCoeff() < 0.0);
}

TEST_CASE("Gibbs lattice and INGARCH simulators")
{
    const auto model = MrfModel::potts({10, 12}, 4);
    Rng rng = make_rng({.seed = 17});
    const auto r = gibbs_lattice(model, Eigen::VectorXd::Constant(1, 0.8), 25, rng);
    CHECK(r.lattice.size() == 120);
    CHECK(r.magnetisation.size() == 25);
    for (auto s : r.lattice) CHECK((s >= 0 && s < 4));

    const auto xs = simulate_ingarch(Eigen::Vector3d(0.7, 0.4, 1.0), 0.3, 300, rng, 1.0, 100);
    CHECK(xs.size() == 300);
    CHECK(*std::min_element(xs.begin(), xs.end()) >= 0);
}

TEST_CASE("posterior predictive returns per_draw states per parameter row")
{
    const CmpGraphical m(3);
    Eigen::MatrixXd theta(2, m.dimension());
    theta.setZero();
    theta.leftCols(3).setConstant(0.5);
    theta.rightCols(3).setConstant(1.0);
    Rng rng = make_rng({.seed = 18});
    const auto out = mh_posterior_predictive_cmp_graphical(m, theta, 7, {}, rng);
    CHECK(out.size() == 14);
    for (const auto& x : out) {
        CHECK(x.size() == 3);
        CHECK(*std::min_element(x.begin(), x.end()) >= 0);
    }
}

} // TEST_SUITE
