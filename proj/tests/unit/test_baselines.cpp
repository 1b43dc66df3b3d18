#include "lrmbayes/baselines.hpp"
#include "lrmbayes/samplers.hpp"

#include <doctest.h>

#include <cmath>

using namespace lrmbayes;

namespace {

void check_derivatives(const EtaLoss& loss, const Eigen::VectorXd& eta)
{
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    loss.derivatives(eta, g, h);
    const double step = 1e-5;
    for (Eigen::Index j = 0; j < eta.size(); ++j) {
        Eigen::VectorXd a = eta, b = eta;
        a(j) += step;
        b(j) -= step;
        CHECK(g(j) == doctest::Approx((loss.value(a) - loss.value(b)) / (2 * step)).epsilon(1e-5));
        Eigen::VectorXd ga, gb;
        Eigen::MatrixXd ha, hb;
        loss.derivatives(a, ga, ha);
        loss.derivatives(b, gb, hb);
        for (Eigen::Index i = 0; i < eta.size(); ++i)
            CHECK(h(i, j) == doctest::Approx((ga(i) - gb(i)) / (2 * step)).epsilon(1e-4));
    }
}

std::vector<StatePoint> cmp_points(std::size_t n, std::uint64_t seed)
{
    Rng rng = make_rng({.seed = seed});
    std::vector<StatePoint> out;
    for (auto x : sample_cmp_rejection(4.0, 1.25, n, rng)) out.push_back({x});
    return out;
}

} // namespace

TEST_SUITE("baselines") {

TEST_CASE("analytic derivatives match finite differences")
{
    const auto data = cmp_points(400, 1);
    const CmpUnivariate cmp;
    check_derivatives(DfdLoss(cmp, data, DomainSpec::counts(1)), Eigen::Vector2d(1.3, 1.1));
    check_derivatives(TruncatedLikelihoodLoss(data), Eigen::Vector2d(1.3, 1.1));

    const auto ising = MrfModel::ising({8, 8});
    Rng rng = make_rng({.seed = 2});
    const std::vector<StatePoint> lat{gibbs_lattice(ising, Eigen::Vector2d(0.1, 0.2), 20, rng).lattice};
    check_derivatives(PseudoLikelihoodLoss(ising, lat), Eigen::Vector2d(0.05, 0.3));
    check_derivatives(DfdLoss(ising, lat), Eigen::Vector2d(0.05, 0.3));
}

TEST_CASE("truncated likelihood by direct summation")
{
    const auto data = cmp_points(50, 3);
    const TruncatedLikelihoodLoss loss(data, 99);
    const Eigen::Vector2d eta(1.2, 0.9);
    double z = 0.0;
    for (int y = 0; y <= 99; ++y) z += std::exp(eta(0) * y - eta(1) * std::lgamma(y + 1.0));
    double nll = 0.0;
    for (const auto& x : data)
        nll -= eta(0) * x[0] - eta(1) * std::lgamma(x[0] + 1.0) - std::log(z);
    CHECK(loss.value(eta) == doctest::Approx(nll / data.size()).epsilon(1e-12));
}

TEST_CASE("pseudo-likelihood equals the mean negative log full conditional")
{
    const auto potts = MrfModel::potts({4, 5}, 3);
    Rng rng = make_rng({.seed = 4});
    const std::vector<StatePoint> lat{gibbs_lattice(potts, Eigen::VectorXd::Constant(1, 0.5), 10, rng).lattice};
    const PseudoLikelihoodLoss loss(potts, lat);
    const Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 0.7);
    double want = 0.0;
    for (std::size_t k = 0; k < 20; ++k) {
        const auto p = site_conditional(potts, eta, lat[0], k);
        want -= std::log(p[static_cast<std::size_t>(lat[0][k])]);
    }
    CHECK(loss.value(eta) == doctest::Approx(want / 20.0).epsilon(1e-12));
}

TEST_CASE("Laplace fit recovers the truncated-likelihood MLE")
{
    const auto data = cmp_points(20000, 5);
    const TruncatedLikelihoodLoss loss(data);
    const auto fit = minimise_loss(loss, Eigen::Vector2d(0.0, 0.5));
    CHECK(fit.converged);
    CHECK(fit.mode(0) == doctest::Approx(std::log(4.0)).epsilon(0.05));
    CHECK(fit.mode(1) == doctest::Approx(1.25).epsilon(0.06));
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    loss.derivatives(fit.mode, g, h);
    CHECK(g.norm() < 1e-6);
    const auto q = fit.quadratic(loss.n());
    CHECK(q.evaluate(fit.mode + Eigen::Vector2d(0.01, 0.0)) > q.evaluate(fit.mode));
}

TEST_CASE("loss target rejects a NaN log target")
{
    const auto data = cmp_points(100, 6);
    auto loss = std::make_shared<const TruncatedLikelihoodLoss>(data);
    const GaussianPrior prior{Eigen::Vector2d(1.0, 1.0), Eigen::Matrix2d::Identity()};
    const LossTarget t(LossKind::TruncatedLikelihood, loss, prior, 1.0);
    const Eigen::Vector2d eta(1.3, 1.2);
    const double lp = t(eta);
    const double want = -1.0 * loss->n() * loss->value(eta) - 0.5 * (eta - prior.mu).squaredNorm();
    CHECK(lp - t(Eigen::Vector2d(1.0, 1.0)) ==
          doctest::Approx(want - (-1.0 * loss->n() * loss->value(Eigen::Vector2d(1.0, 1.0)))).epsilon(1e-10));
}

} // TEST_SUITE
